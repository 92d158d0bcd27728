import numpy as np
import pytest

from hutrack.errors import ValidationError
from hutrack.evaluation import iou
from hutrack.frame_io import list_frames, load_ground_truth, load_sequence
from hutrack.synth import Actor, SceneScript, load_script, render, script_from_mapping, write_scene


def static_square(frames=5):
    return SceneScript(
        frames=frames, width=40, height=30, background=(10, 10, 10),
        actors=(Actor(1, "rectangle", (200, 200, 200), (8, 8), ((0, 10, 10),)),),
    )


CROSSING = {
    "scene.frames": "30",
    "scene.width": "200",
    "scene.height": "100",
    "scene.background": "0,0,0",
    "scene.separable": "true",
    "actor.1.color": "250,20,20",
    "actor.1.size": "20,20",
    "actor.1.path": "0:5,10 ; 29:175,10",
    "actor.2.shape": "ellipse",
    "actor.2.color": "20,250,20",
    "actor.2.size": "20,20",
    "actor.2.path": "0:175,60 ; 29:5,60",
}


def test_static_square_frames_and_boxes():
    frames, gt = render(static_square())
    assert len(frames) == 5
    assert all(np.array_equal(f.pixels, frames[0].pixels) for f in frames)
    assert [r.box for r in gt.records] == [(10, 10, 8, 8)] * 5
    assert frames[0].pixels[10, 10].tolist() == [200, 200, 200]
    assert frames[0].pixels[9, 9].tolist() == [10, 10, 10]


def test_crossing_actors():
    script = script_from_mapping(CROSSING)
    frames, gt = render(script)
    assert len(gt.records) == 60
    for t, boxes in gt.by_frame().items():
        assert iou(boxes[1], boxes[2]) == 0.0
    first = gt.by_frame()[0]
    last = gt.by_frame()[29]
    assert first[1][0] == 5 and last[1][0] == 175
    assert first[2][0] < 175 + 20 and last[2][0] == 5 + int(np.flatnonzero(
        script.actors[1].footprint().any(axis=0))[0])


def test_entry_and_exit():
    values = dict(CROSSING, **{"actor.1.entry": "10", "actor.2.exit": "12"})
    _, gt = render(script_from_mapping(values))
    frames_1 = [r.frame_index for r in gt.records if r.object_id == 1]
    frames_2 = [r.frame_index for r in gt.records if r.object_id == 2]
    assert frames_1 == list(range(10, 30))
    assert frames_2 == list(range(0, 12))


def test_same_seed_same_frames():
    values = dict(CROSSING, **{"scene.noise": "6"})
    a, _ = render(script_from_mapping(values), seed=3)
    b, _ = render(script_from_mapping(values), seed=3)
    c, _ = render(script_from_mapping(values), seed=4)
    assert all(np.array_equal(x.pixels, y.pixels) for x, y in zip(a, b))
    assert not all(np.array_equal(x.pixels, y.pixels) for x, y in zip(a, c))


def test_out_of_bounds_rejected():
    with pytest.raises(ValidationError):
        script_from_mapping(dict(CROSSING, **{"actor.1.path": "0:5,10 ; 29:190,10"}))


def test_invalid_scripts():
    bad = [
        {"scene.frames": "0"},
        {"actor.2.color": "250,20,20"},  # separable needs distinct colours
        {"actor.1.shape": "triangle"},
        {"actor.1.path": "5:5,10 ; 2:10,10"},
        {"actor.1.entry": "30"},
        {"actor.1.wobble": "1"},
        {"scene.depth": "3"},
        {"actor.1.color": "300,0,0"},
        {"actor.1.size": "20"},
    ]
    for patch in bad:
        with pytest.raises(ValidationError):
            script_from_mapping(dict(CROSSING, **patch))
    missing = dict(CROSSING)
    del missing["actor.1.path"]
    with pytest.raises(ValidationError):
        script_from_mapping(missing)


def test_gt_box_is_tight_bbox_of_drawn_pixels():
    values = dict(CROSSING, **{"scene.background": "0,0,0"})
    frames, gt = render(script_from_mapping(values))
    for f in (0, 13, 29):
        px = frames[f].pixels
        for oid, channel in ((1, 0), (2, 1)):
            ys, xs = np.nonzero(px[:, :, channel] > 100)
            assert gt.by_frame()[f][oid] == (xs.min(), ys.min(), xs.max() - xs.min() + 1, ys.max() - ys.min() + 1)


def test_checker_texture():
    a = Actor(1, "rectangle", (200, 100, 50), (6, 6), ((0, 0, 0),), texture="checker", cell=3)
    rgb = a.texture_rgb()
    assert rgb[0, 0].tolist() == [200, 100, 50]
    assert rgb[0, 3].tolist() == [100, 50, 25]
    assert rgb[3, 3].tolist() == [200, 100, 50]


def test_keyframe_interpolation_rounds_half_up():
    a = Actor(1, "rectangle", (1, 1, 1), (1, 1), ((0, 0, 0), (4, 2, 6)))
    assert [a.position(t) for t in range(-1, 6)] == [(0, 0), (0, 0), (1, 2), (1, 3), (2, 5), (2, 6), (2, 6)]


def test_write_and_reload(tmp_path):
    script = tmp_path / "scene.txt"
    script.write_text("\n".join(f"{k} = {v}" for k, v in CROSSING.items()) + "\n")
    frames, gt = render(load_script(script), seed=0)
    out = write_scene(frames, gt, tmp_path / "out")
    paths = list_frames(out / "frames")
    assert [p.name for p in paths[:2]] == ["frame_00000.png", "frame_00001.png"]
    reloaded = load_sequence(out / "frames")
    assert all(np.array_equal(x.pixels, y.pixels) for x, y in zip(frames, reloaded))
    assert load_ground_truth(out / "gt.csv").records == gt.records
