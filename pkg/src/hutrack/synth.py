"""Synthetic moving-shape sequences with exact ground truth.

Scene scripts use the same flat ``key = value`` format as the pipeline
configuration::

    scene.frames = 30
    scene.width = 320
    scene.height = 240
    scene.background = 30,30,30
    scene.noise = 0
    scene.separable = true

    actor.1.shape = rectangle        # or ellipse
    actor.1.color = 220,40,40
    actor.1.size = 24,32             # width,height
    actor.1.entry = 0                # first frame drawn
    actor.1.exit = 30                # first frame no longer drawn
    actor.1.path = 0:10,100 ; 29:280,100
    actor.1.texture = checker        # or solid
    actor.1.cell = 3

``path`` lists ``frame:x,y`` keyframes for the shape's top-left corner;
positions are linearly interpolated, rounded to whole pixels and held
constant outside the keyframe range.  A ``checker`` texture alternates
the fill colour with its half-intensity shade in ``cell``-pixel squares
that move with the actor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import parse_bool, read_kv_file
from .errors import ParseError, ValidationError
from .frame_io import BoxRecord, Frame, GroundTruth, save_frame, write_box_csv

SHAPES = ("rectangle", "ellipse")
TEXTURES = ("solid", "checker")


@dataclass(frozen=True)
class Actor:
    object_id: int
    shape: str
    color: tuple[int, int, int]
    size: tuple[int, int]
    keyframes: tuple[tuple[int, int, int], ...]
    entry: int = 0
    exit: int | None = None
    texture: str = "solid"
    cell: int = 3

    def position(self, t: int) -> tuple[int, int]:
        """Top-left corner at frame ``t``."""
        kf = self.keyframes
        if t <= kf[0][0]:
            return kf[0][1], kf[0][2]
        if t >= kf[-1][0]:
            return kf[-1][1], kf[-1][2]
        for (f0, x0, y0), (f1, x1, y1) in zip(kf, kf[1:]):
            if f0 <= t <= f1:
                a = (t - f0) / (f1 - f0)
                return (math.floor(x0 + a * (x1 - x0) + 0.5), math.floor(y0 + a * (y1 - y0) + 0.5))
        raise AssertionError("unreachable")

    def present(self, t: int, n_frames: int) -> bool:
        end = n_frames if self.exit is None else self.exit
        return self.entry <= t < end

    def footprint(self) -> np.ndarray:
        """Boolean silhouette of size ``(h, w)``."""
        w, h = self.size
        if self.shape == "rectangle":
            return np.ones((h, w), dtype=bool)
        yy, xx = np.mgrid[0:h, 0:w]
        u = (xx + 0.5 - w / 2) / (w / 2)
        v = (yy + 0.5 - h / 2) / (h / 2)
        return u * u + v * v <= 1.0

    def texture_rgb(self) -> np.ndarray:
        w, h = self.size
        rgb = np.empty((h, w, 3), dtype=np.uint8)
        rgb[:] = self.color
        if self.texture == "checker":
            yy, xx = np.mgrid[0:h, 0:w]
            dark = ((xx // self.cell) + (yy // self.cell)) % 2 == 1
            rgb[dark] = np.array(self.color, dtype=np.uint8) // 2
        return rgb


@dataclass(frozen=True)
class SceneScript:
    frames: int
    width: int
    height: int
    background: tuple[int, int, int] = (0, 0, 0)
    noise: int = 0
    separable: bool = False
    actors: tuple[Actor, ...] = field(default_factory=tuple)

    def validate(self) -> None:
        if self.frames < 1:
            raise ValidationError("scene needs at least one frame")
        if self.width < 3 or self.height < 3:
            raise ValidationError("scene must be at least 3x3")
        if not 0 <= self.noise <= 255:
            raise ValidationError(f"noise amplitude must be in [0, 255], got {self.noise}")
        _check_color(self.background, "background")
        ids = [a.object_id for a in self.actors]
        if len(set(ids)) != len(ids):
            raise ValidationError("actor ids must be unique")
        for a in self.actors:
            tag = f"actor {a.object_id}"
            if a.object_id < 1:
                raise ValidationError(f"{tag}: id must be positive")
            if a.shape not in SHAPES:
                raise ValidationError(f"{tag}: shape must be one of {SHAPES}")
            if a.texture not in TEXTURES:
                raise ValidationError(f"{tag}: texture must be one of {TEXTURES}")
            if a.cell < 1:
                raise ValidationError(f"{tag}: cell must be positive")
            if a.size[0] < 1 or a.size[1] < 1:
                raise ValidationError(f"{tag}: size must be positive")
            _check_color(a.color, tag)
            if not a.keyframes:
                raise ValidationError(f"{tag}: path needs at least one keyframe")
            frames = [k[0] for k in a.keyframes]
            if frames != sorted(set(frames)):
                raise ValidationError(f"{tag}: keyframes must have increasing frame numbers")
            end = self.frames if a.exit is None else a.exit
            if not 0 <= a.entry < end <= self.frames:
                raise ValidationError(f"{tag}: need 0 <= entry < exit <= frames")
            for t in range(a.entry, end):
                x, y = a.position(t)
                if x < 0 or y < 0 or x + a.size[0] > self.width or y + a.size[1] > self.height:
                    raise ValidationError(
                        f"{tag}: shape at ({x}, {y}) leaves the frame at frame {t}"
                    )
        if self.separable:
            colors = [a.color for a in self.actors]
            if len(set(colors)) != len(colors):
                raise ValidationError("separable scene needs pairwise distinct actor colours")


def _check_color(c, tag):
    if len(c) != 3 or any(not 0 <= v <= 255 for v in c):
        raise ValidationError(f"{tag}: colour must be three values in [0, 255]")


def _int_tuple(text: str, n: int, key: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise ValidationError(f"{key}: expected integers, got {text!r}") from exc
    if len(vals) != n:
        raise ValidationError(f"{key}: expected {n} comma-separated values, got {text!r}")
    return vals


def _parse_path(text: str, key: str) -> tuple[tuple[int, int, int], ...]:
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        frame, _, xy = chunk.partition(":")
        try:
            f = int(frame)
        except ValueError as exc:
            raise ValidationError(f"{key}: bad keyframe {chunk!r}") from exc
        x, y = _int_tuple(xy, 2, key)
        out.append((f, x, y))
    return tuple(out)


def script_from_mapping(values: dict[str, str]) -> SceneScript:
    scene = {}
    actors: dict[int, dict[str, str]] = {}
    for key, text in values.items():
        parts = key.split(".")
        if parts[0] == "scene" and len(parts) == 2:
            scene[parts[1]] = text
        elif parts[0] == "actor" and len(parts) == 3:
            try:
                aid = int(parts[1])
            except ValueError as exc:
                raise ValidationError(f"actor id must be an integer in {key!r}") from exc
            actors.setdefault(aid, {})[parts[2]] = text
        else:
            raise ValidationError(f"unknown scene key {key!r}")

    known_scene = {"frames", "width", "height", "background", "noise", "separable"}
    unknown = set(scene) - known_scene
    if unknown:
        raise ValidationError(f"unknown scene keys: {sorted(unknown)}")
    try:
        frames = int(scene["frames"])
        width = int(scene["width"])
        height = int(scene["height"])
    except KeyError as exc:
        raise ValidationError(f"scene.{exc.args[0]} is required") from exc
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc

    known_actor = {"shape", "color", "size", "path", "entry", "exit", "texture", "cell"}
    built = []
    for aid in sorted(actors):
        a = actors[aid]
        unknown = set(a) - known_actor
        if unknown:
            raise ValidationError(f"actor {aid}: unknown keys {sorted(unknown)}")
        for req in ("color", "size", "path"):
            if req not in a:
                raise ValidationError(f"actor.{aid}.{req} is required")
        built.append(Actor(
            object_id=aid,
            shape=a.get("shape", "rectangle"),
            color=_int_tuple(a["color"], 3, f"actor.{aid}.color"),
            size=_int_tuple(a["size"], 2, f"actor.{aid}.size"),
            keyframes=_parse_path(a["path"], f"actor.{aid}.path"),
            entry=int(a.get("entry", 0)),
            exit=int(a["exit"]) if "exit" in a else None,
            texture=a.get("texture", "solid"),
            cell=int(a.get("cell", 3)),
        ))
    script = SceneScript(
        frames=frames,
        width=width,
        height=height,
        background=_int_tuple(scene.get("background", "0,0,0"), 3, "scene.background"),
        noise=int(scene.get("noise", 0)),
        separable=parse_bool(scene.get("separable", "false")),
        actors=tuple(built),
    )
    script.validate()
    return script


def load_script(path) -> SceneScript:
    try:
        return script_from_mapping(read_kv_file(path))
    except ParseError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def render(script: SceneScript, seed: int = 0) -> tuple[list[Frame], GroundTruth]:
    """Draw every frame and record each actor's tight bounding box."""
    script.validate()
    rng = np.random.default_rng(seed)
    shapes = {a.object_id: (a.footprint(), a.texture_rgb()) for a in script.actors}
    frames, records = [], []
    for t in range(script.frames):
        canvas = np.empty((script.height, script.width, 3), dtype=np.uint8)
        canvas[:] = script.background
        for a in script.actors:
            if not a.present(t, script.frames):
                continue
            mask, rgb = shapes[a.object_id]
            x, y = a.position(t)
            h, w = mask.shape
            region = canvas[y:y + h, x:x + w]
            region[mask] = rgb[mask]
            rows = np.flatnonzero(mask.any(axis=1))
            cols = np.flatnonzero(mask.any(axis=0))
            records.append(BoxRecord(
                t, a.object_id,
                x + int(cols[0]), y + int(rows[0]),
                int(cols[-1] - cols[0] + 1), int(rows[-1] - rows[0] + 1),
            ))
        if script.noise:
            jitter = rng.integers(-script.noise, script.noise + 1, size=canvas.shape)
            canvas = np.clip(canvas.astype(np.int16) + jitter, 0, 255).astype(np.uint8)
        frames.append(Frame(canvas, t))
    return frames, GroundTruth(records)


def frame_name(t: int) -> str:
    return f"frame_{t:05d}.png"


def write_scene(frames: list[Frame], gt: GroundTruth, out_dir) -> Path:
    out = Path(out_dir)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    for f in frames:
        save_frame(f, out / "frames" / frame_name(f.index))
    write_box_csv(gt.records, out / "gt.csv")
    return out
