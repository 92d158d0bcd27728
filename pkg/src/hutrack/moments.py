"""Color moments and Hu moment invariants of blobs.

Both feature families are evaluated from integer power sums in exact
(arbitrary precision) integer arithmetic and divided once at the end, so
every value is the correctly rounded float of its exact definition.
Hu invariants are computed on the binary silhouette with pixel centres at
integer ``(column, row)`` coordinates.  Because the silhouette moments of
order 2 and 3 are normalised by ``m00**2`` and ``m00**2.5``, each of the
seven invariants reduces to an integer polynomial divided by a power of
``m00``, which keeps translation and quarter-turn invariance exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .errors import BoundsError, ValidationError
from .frame_io import Frame
from .morphology import Blob

HU_TRANSFORMS = ("raw", "signed-log")
HU_LOG_EPS = 1e-30

FEATURE_NAMES = (
    "mu_R", "sigma_R", "s_R",
    "mu_G", "sigma_G", "s_G",
    "mu_B", "sigma_B", "s_B",
    "phi1", "phi2", "phi3", "phi4", "phi5", "phi6", "phi7",
)
N_FEATURES = len(FEATURE_NAMES)


@dataclass(frozen=True)
class ColorMoments:
    """Per-channel mean, population standard deviation and skewness, RGB order."""

    mean: tuple[float, float, float]
    std: tuple[float, float, float]
    skew: tuple[float, float, float]

    def as_vector(self) -> list[float]:
        out = []
        for c in range(3):
            out.extend((self.mean[c], self.std[c], self.skew[c]))
        return out


@dataclass(frozen=True)
class HuMoments:
    phi: tuple[float, float, float, float, float, float, float]

    def __iter__(self):
        return iter(self.phi)

    def __getitem__(self, i):
        return self.phi[i]


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """The 16 association features plus the blob area."""

    values: np.ndarray
    area: int = 0

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.shape != (N_FEATURES,):
            raise ValidationError(f"feature vector must have {N_FEATURES} values, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return N_FEATURES

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return self.area == other.area and bool(np.array_equal(self.values, other.values))


def _signed_cbrt(x: float) -> float:
    return float(np.cbrt(x))


def _channel_moments(values: np.ndarray) -> tuple[float, float, float]:
    n = int(values.size)
    v = values.astype(np.int64)
    s1 = int(v.sum())
    s2 = int((v * v).sum())
    s3 = int((v * v * v).sum())
    mean = s1 / n
    # n^2 * var and n^3 * m3 as exact integers
    var_num = n * s2 - s1 * s1
    m3_num = n * n * s3 - 3 * n * s1 * s2 + 2 * s1 ** 3
    std = float(np.sqrt(var_num / (n * n)))
    skew = _signed_cbrt(m3_num / n ** 3)
    return mean, std, skew


def color_moments(f: Frame, b: Blob) -> ColorMoments:
    """Mean, standard deviation (divisor N) and signed-cube-root skewness."""
    if (
        b.xs.min() < 0 or b.ys.min() < 0
        or b.xs.max() >= f.width or b.ys.max() >= f.height
    ):
        raise BoundsError(f"blob {b.label} extends outside the {f.width}x{f.height} frame")
    colors = f.pixels[b.ys, b.xs]
    per = [_channel_moments(colors[:, c]) for c in range(3)]
    return ColorMoments(
        mean=tuple(p[0] for p in per),
        std=tuple(p[1] for p in per),
        skew=tuple(p[2] for p in per),
    )


def _raw_sums(b: Blob, order: int = 3) -> tuple[dict[tuple[int, int], int], int]:
    """Integer raw moments about the bbox origin, plus the pixel count."""
    x = b.xs - b.xs.min()
    y = b.ys - b.ys.min()
    n = b.area
    span = int(max(x.max(), y.max())) + 1
    if span ** order * n >= 2 ** 62:
        # int64 could overflow; fall back to Python integers
        x = x.astype(object)
        y = y.astype(object)
    xp = [np.ones_like(x)]
    yp = [np.ones_like(y)]
    for _ in range(order):
        xp.append(xp[-1] * x)
        yp.append(yp[-1] * y)
    raw = {}
    for p in range(order + 1):
        for q in range(order + 1 - p):
            raw[p, q] = int((xp[p] * yp[q]).sum())
    return raw, n


def _scaled_central(raw: dict[tuple[int, int], int], n: int, p: int, q: int) -> int:
    """``n**(p+q) * mu_pq`` as an exact integer."""
    sx, sy = raw[1, 0], raw[0, 1]
    total = 0
    for i in range(p + 1):
        for j in range(q + 1):
            total += (
                comb(p, i) * comb(q, j)
                * n ** (i + j) * (-sx) ** (p - i) * (-sy) ** (q - j)
                * raw[i, j]
            )
    return total


def central_moments(b: Blob, p: int, q: int) -> float:
    """Silhouette central moment about the centroid."""
    if p < 0 or q < 0 or p + q > 3:
        raise ValidationError(f"central moment order ({p}, {q}) not supported")
    raw, n = _raw_sums(b)
    return _scaled_central(raw, n, p, q) / n ** (p + q)


def hu_moments(b: Blob) -> HuMoments:
    """Seven Hu invariants of the blob silhouette.

    With ``A_pq = n**(p+q) * mu_pq`` the normalised moments are
    ``eta_pq = A_pq / n**(1.5*(p+q) + 1)``; the half-integer powers of
    ``n`` from third-order terms always pair up inside each invariant.
    """
    raw, n = _raw_sums(b)
    A = {pq: _scaled_central(raw, n, *pq) for pq in
         ((2, 0), (0, 2), (1, 1), (3, 0), (0, 3), (2, 1), (1, 2))}
    a20, a02, a11 = A[2, 0], A[0, 2], A[1, 1]
    a30, a03, a21, a12 = A[3, 0], A[0, 3], A[2, 1], A[1, 2]

    t0 = a30 + a12
    t1 = a21 + a03
    u0 = a30 - 3 * a12
    u1 = 3 * a21 - a03
    d = a20 - a02

    # second-order eta carries n**4, third-order n**5.5
    phi1 = (a20 + a02) / n ** 4
    phi2 = (d * d + 4 * a11 * a11) / n ** 8
    phi3 = (u0 * u0 + u1 * u1) / n ** 11
    phi4 = (t0 * t0 + t1 * t1) / n ** 11
    phi5 = (u0 * t0 * (t0 * t0 - 3 * t1 * t1) + u1 * t1 * (3 * t0 * t0 - t1 * t1)) / n ** 22
    phi6 = (d * (t0 * t0 - t1 * t1) + 4 * a11 * t0 * t1) / n ** 15
    phi7 = (u1 * t0 * (t0 * t0 - 3 * t1 * t1) - u0 * t1 * (3 * t0 * t0 - t1 * t1)) / n ** 22
    return HuMoments((phi1, phi2, phi3, phi4, phi5, phi6, phi7))


def signed_log(phi: Iterable[float], eps: float = HU_LOG_EPS) -> list[float]:
    """``-sign(v) * log10(|v| + eps)`` per value."""
    out = []
    for v in phi:
        out.append(float(-np.sign(v) * np.log10(abs(v) + eps)))
    return out


def extract_features(f: Frame, b: Blob, hu_transform: str = "raw") -> FeatureVector:
    if hu_transform not in HU_TRANSFORMS:
        raise ValidationError(f"hu_transform must be one of {HU_TRANSFORMS}, got {hu_transform!r}")
    colors = color_moments(f, b).as_vector()
    hu = list(hu_moments(b))
    if hu_transform == "signed-log":
        hu = signed_log(hu)
    return FeatureVector(np.array(colors + hu), b.area)


FEATURE_REPORT_HEADER = ("frame_index", "blob_label", "area") + FEATURE_NAMES


def format_feature_row(frame_index: int, blob_label: int, fv: FeatureVector) -> str:
    """One CSV line of the feature report."""
    fields = [str(int(frame_index)), str(int(blob_label)), str(int(fv.area))]
    fields += ["%.10g" % v for v in fv.values]
    return ",".join(fields)


def write_feature_report(rows: Sequence[tuple[int, int, FeatureVector]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(FEATURE_REPORT_HEADER) + "\n")
        for frame_index, label, fv in rows:
            fh.write(format_feature_row(frame_index, label, fv) + "\n")
