import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from hutrack.errors import BoundsError, ValidationError
from hutrack.frame_io import Frame
from hutrack.moments import (
    FEATURE_REPORT_HEADER,
    FeatureVector,
    central_moments,
    color_moments,
    extract_features,
    format_feature_row,
    hu_moments,
    signed_log,
)
from hutrack.morphology import Blob


def frame_with(colors: dict, size=(8, 8), fill=(0, 0, 0)):
    px = np.zeros((size[1], size[0], 3), dtype=np.uint8)
    px[:] = fill
    for (x, y), rgb in colors.items():
        px[y, x] = rgb
    return Frame(px)


def square(x0, y0, n, label=1):
    return Blob.from_pixels(label, [(x, y) for x in range(x0, x0 + n) for y in range(y0, y0 + n)])


# --- color moments ---------------------------------------------------------

def test_uniform_blob_color_moments():
    b = square(1, 1, 3)
    f = frame_with({p: (100, 50, 200) for p in b.pixels})
    cm = color_moments(f, b)
    assert cm.mean == (100.0, 50.0, 200.0)
    assert cm.std == (0.0, 0.0, 0.0)
    assert cm.skew == (0.0, 0.0, 0.0)


def test_two_pixel_symmetric_red():
    b = Blob.from_pixels(1, [(0, 0), (1, 0)])
    f = frame_with({(0, 0): (0, 0, 0), (1, 0): (200, 0, 0)})
    cm = color_moments(f, b)
    assert (cm.mean[0], cm.std[0], cm.skew[0]) == (100.0, 100.0, 0.0)


def test_three_pixel_skewed_red():
    b = Blob.from_pixels(1, [(0, 0), (1, 0), (2, 0)])
    f = frame_with({(0, 0): (0, 0, 0), (1, 0): (0, 0, 0), (2, 0): (255, 0, 0)})
    cm = color_moments(f, b)
    # frozen from the exact-rational oracle: mu=85, var=14450, m3=1228250
    assert cm.mean[0] == 85.0
    assert cm.std[0] == pytest.approx(120.20815280171308, rel=1e-12)
    assert cm.skew[0] == pytest.approx(107.09328924106418, rel=1e-12)
    assert oracles.color_moments([0, 0, 255]) == pytest.approx((85.0, 120.20815280171308, 107.09328924106418), rel=1e-12)


def test_single_pixel_blob_has_no_spread():
    b = Blob.from_pixels(1, [(2, 3)])
    cm = color_moments(frame_with({(2, 3): (9, 99, 199)}), b)
    assert cm.std == (0.0, 0.0, 0.0) and cm.skew == (0.0, 0.0, 0.0)


def test_blob_outside_frame():
    with pytest.raises(BoundsError):
        color_moments(frame_with({}, size=(4, 4)), Blob.from_pixels(1, [(4, 0)]))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 255), min_size=1, max_size=30), st.randoms(use_true_random=False))
def test_color_moments_permutation_and_mirror(values, rnd):
    n = len(values)
    pts = [(i % 6, i // 6) for i in range(n)]
    b = Blob.from_pixels(1, pts)
    f1 = frame_with({p: (v, v, v) for p, v in zip(pts, values)}, size=(6, 6))
    shuffled = values[:]
    rnd.shuffle(shuffled)
    f2 = frame_with({p: (v, v, v) for p, v in zip(pts, shuffled)}, size=(6, 6))
    c1, c2 = color_moments(f1, b), color_moments(f2, b)
    assert c1 == c2
    assert min(c1.std) >= 0
    # mirroring the histogram about 127.5 flips the skew sign
    f3 = frame_with({p: (255 - v,) * 3 for p, v in zip(pts, values)}, size=(6, 6))
    c3 = color_moments(f3, b)
    assert c3.skew[0] == pytest.approx(-c1.skew[0], rel=1e-12, abs=1e-9)


# --- central and Hu moments -----------------------------------------------

def test_mu10_vanishes_exactly(rng):
    b = Blob.from_pixels(1, oracles.random_connected_pixels(rng, 17))
    assert central_moments(b, 1, 0) == 0.0 and central_moments(b, 0, 1) == 0.0


def test_single_pixel_moments():
    b = Blob.from_pixels(1, [(5, 7)])
    assert central_moments(b, 0, 0) == 1.0
    for p, q in [(2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)]:
        assert central_moments(b, p, q) == 0.0
    assert list(hu_moments(b)) == [0.0] * 7


def test_two_by_two_square():
    b = square(3, 4, 2)
    assert central_moments(b, 2, 0) == 1.0
    assert central_moments(b, 0, 2) == 1.0
    assert central_moments(b, 1, 1) == 0.0
    hu = hu_moments(b)
    assert hu[0] == 0.125 and hu[1] == 0.0


def test_unsupported_order():
    with pytest.raises(ValidationError):
        central_moments(square(0, 0, 2), 2, 2)


def test_quarter_turn_symmetric_blob_phi2_zero():
    plus = Blob.from_pixels(1, [(2, 0), (2, 1), (0, 2), (1, 2), (2, 2), (3, 2), (4, 2), (2, 3), (2, 4)])
    assert hu_moments(plus)[1] == 0.0


def test_hu_matches_oracle_on_l_shape():
    pts = [(0, 0), (0, 1), (0, 2), (0, 3), (1, 3), (2, 3)]
    ours = list(hu_moments(Blob.from_pixels(1, pts)))
    ref = oracles.hu_moments(pts)
    assert all(oracles.rel_close(a, b) for a, b in zip(ours, ref)), (ours, ref)
    assert ours[6] != 0.0  # an L is chiral


def test_reflection_flips_phi7():
    pts = [(0, 0), (0, 1), (0, 2), (0, 3), (1, 3), (2, 3), (1, 1)]
    mirrored = [(-x, y) for x, y in pts]
    a = hu_moments(Blob.from_pixels(1, [(x + 10, y) for x, y in pts]))
    b = hu_moments(Blob.from_pixels(1, [(x + 10, y) for x, y in mirrored]))
    assert a.phi[:6] == b.phi[:6]
    assert a[6] == -b[6] != 0.0


def test_large_blob_uses_wide_integers():
    b = Blob.from_pixels(1, [(x, y) for x in range(0, 4000, 7) for y in range(0, 3000, 11)])
    assert all(np.isfinite(hu_moments(b).phi))


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    area=st.integers(1, 40),
    dx=st.integers(-500, 500),
    dy=st.integers(-500, 500),
)
def test_hu_translation_and_rotation(seed, area, dx, dy):
    pts = oracles.random_connected_pixels(np.random.default_rng(seed), area)
    base = hu_moments(Blob.from_pixels(1, [(x + 600, y + 600) for x, y in pts]))
    moved = hu_moments(Blob.from_pixels(1, [(x + 600 + dx, y + 600 + dy) for x, y in pts]))
    turned = hu_moments(Blob.from_pixels(1, [(600 - y, x + 600) for x, y in pts]))
    assert base == moved
    assert base.phi[:6] == turned.phi[:6]
    assert abs(base[6]) == abs(turned[6])


def test_scale_is_approximately_invariant():
    small = hu_moments(square(0, 0, 8))
    big = hu_moments(square(0, 0, 32))
    for a, b in zip(small, big):
        if b != 0.0:
            assert abs(a - b) / abs(b) < 0.05


# --- feature vector ----------------------------------------------------------

def test_feature_vector_composition(rng):
    pts = oracles.random_connected_pixels(rng, 20)
    b = Blob.from_pixels(3, [(x + 10, y + 10) for x, y in pts])
    f = Frame(rng.integers(0, 256, size=(30, 30, 3), dtype=np.uint8))
    fv = extract_features(f, b)
    assert fv.values[:9].tolist() == color_moments(f, b).as_vector()
    assert fv.values[9:].tolist() == list(hu_moments(b))
    assert fv.area == 20


def test_uniform_single_pixel_features():
    b = Blob.from_pixels(1, [(1, 1)])
    fv = extract_features(frame_with({(1, 1): (7, 8, 9)}, size=(3, 3)), b)
    assert fv.values.tolist() == [7, 0, 0, 8, 0, 0, 9, 0, 0] + [0.0] * 7


def test_signed_log_transform():
    out = signed_log([0.125, -0.001, 0.0])
    assert out[0] == pytest.approx(-np.log10(0.125))
    assert out[1] == pytest.approx(np.log10(0.001))
    assert out[2] == 0.0
    b = square(0, 0, 2)
    fv = extract_features(frame_with({}, size=(3, 3)), b, hu_transform="signed-log")
    assert fv.values[9] == pytest.approx(-np.log10(0.125))


def test_unknown_hu_transform():
    with pytest.raises(ValidationError):
        extract_features(frame_with({}), square(0, 0, 2), hu_transform="log")


def test_feature_vector_length():
    with pytest.raises(ValidationError):
        FeatureVector(np.zeros(15))


def test_feature_report_row_format():
    # values at the magnitudes a mid-sized blob produces
    values = [65.79, 72.98, 0.69, 64.12, 73.24, 0.73, 63.17, 72.46, 0.75,
              0.213, 0.014, 0.001, 3.793, 2.472, 4.229, 3.578]
    row = format_feature_row(2, 1, FeatureVector(values, 592))
    assert row == "2,1,592,65.79,72.98,0.69,64.12,73.24,0.73,63.17,72.46,0.75,0.213,0.014,0.001,3.793,2.472,4.229,3.578"
    assert len(row.split(",")) == len(FEATURE_REPORT_HEADER) == 19
    assert FEATURE_REPORT_HEADER[3:6] == ("mu_R", "sigma_R", "s_R")
    assert FEATURE_REPORT_HEADER[-1] == "phi7"
