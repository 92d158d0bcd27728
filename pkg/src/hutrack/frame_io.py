"""Frame sequences, ground-truth CSV files and annotated output frames.

Frames are held as ``(height, width, 3)`` ``uint8`` arrays in row-major
order, so ``pixels[h, w]`` is the RGB triple at column ``w`` and row ``h``.
Box records everywhere use ``(x, y, w, h)`` with ``(x, y)`` the inclusive
top-left pixel.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from PIL import Image, ImageDraw, ImageFont, UnidentifiedImageError

from .errors import DimensionError, FrameFormatError, ParseError, ValidationError

SUPPORTED_FORMATS = {"PNG", "PPM", "BMP"}
FRAME_EXTENSIONS = (".png", ".ppm", ".pgm", ".pbm", ".pnm", ".bmp")

# ITU-R BT.601 luma weights
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

MIN_SIDE = 3
BOX_COLOR = (255, 0, 0)


@dataclass(frozen=True, eq=False)
class Frame:
    """An 8-bit RGB raster with its position in the sequence."""

    pixels: np.ndarray
    index: int = 0

    def __post_init__(self):
        px = np.array(self.pixels, copy=True)
        if px.ndim != 3 or px.shape[2] != 3:
            raise DimensionError(f"expected (height, width, 3) pixels, got {px.shape}")
        if px.shape[0] < MIN_SIDE or px.shape[1] < MIN_SIDE:
            raise DimensionError(
                f"frame {px.shape[1]}x{px.shape[0]} is smaller than {MIN_SIDE}x{MIN_SIDE}"
            )
        if px.dtype != np.uint8:
            if px.min(initial=0) < 0 or px.max(initial=0) > 255:
                raise ValidationError("pixel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True, eq=False)
class GrayFrame:
    """Real-valued luminance raster in [0, 255]."""

    values: np.ndarray
    index: int = 0

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 2:
            raise DimensionError(f"expected (height, width) values, got {v.shape}")
        if v.size and (v.min() < 0.0 or v.max() > 255.0):
            raise ValidationError("luminance must lie in [0, 255]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


class BoxRecord(NamedTuple):
    frame_index: int
    object_id: int
    x: int
    y: int
    w: int
    h: int

    @property
    def box(self) -> tuple[int, int, int, int]:
        return (self.x, self.y, self.w, self.h)


@dataclass
class GroundTruth:
    """Per-frame axis-aligned boxes keyed by object id.

    The same shape doubles as tracker output, where ``object_id`` is the
    track id.
    """

    records: list[BoxRecord] = field(default_factory=list)

    def __post_init__(self):
        self.records = [BoxRecord(*map(int, r)) for r in self.records]
        seen = set()
        for r in self.records:
            if r.w <= 0 or r.h <= 0:
                raise ValidationError(
                    f"box for object {r.object_id} at frame {r.frame_index} "
                    f"has non-positive size {r.w}x{r.h}"
                )
            key = (r.frame_index, r.object_id)
            if key in seen:
                raise ValidationError(
                    f"duplicate record for object {r.object_id} at frame {r.frame_index}"
                )
            seen.add(key)

    def __len__(self):
        return len(self.records)

    def by_frame(self) -> dict[int, dict[int, tuple[int, int, int, int]]]:
        out: dict[int, dict[int, tuple[int, int, int, int]]] = {}
        for r in self.records:
            out.setdefault(r.frame_index, {})[r.object_id] = r.box
        return out

    def object_ids(self) -> list[int]:
        return sorted({r.object_id for r in self.records})


def load_frame(path, index: int = 0) -> Frame:
    """Decode a PNG, PPM/PGM or BMP file into a :class:`Frame`.

    16-bit images are scaled to the 8-bit range; grayscale images are
    replicated across the three channels.
    """
    try:
        img = Image.open(path)
    except FileNotFoundError:
        raise
    except UnidentifiedImageError as exc:
        raise FrameFormatError(f"{path}: not a decodable raster") from exc
    with img:
        if img.format not in SUPPORTED_FORMATS:
            raise FrameFormatError(f"{path}: unsupported format {img.format}")
        if img.mode in ("I;16", "I;16B", "I;16L", "I"):
            wide = np.asarray(img, dtype=np.float64)
            maxval = 65535.0 if wide.max(initial=0) > 255 or img.mode != "I" else 255.0
            gray = np.clip(np.rint(wide * (255.0 / maxval)), 0, 255).astype(np.uint8)
            pixels = np.repeat(gray[:, :, None], 3, axis=2)
        else:
            pixels = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return Frame(pixels, index)


def list_frames(directory) -> list[Path]:
    """Frame files of a sequence directory in lexicographic order."""
    directory = Path(directory)
    files = [
        p
        for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in FRAME_EXTENSIONS
    ]
    return sorted(files, key=lambda p: p.name)


def load_sequence(directory) -> list[Frame]:
    return [load_frame(p, i) for i, p in enumerate(list_frames(directory))]


def save_frame(frame: Frame, path) -> None:
    Image.fromarray(np.ascontiguousarray(frame.pixels), mode="RGB").save(path, format="PNG")


def save_mask(bits: np.ndarray, path) -> None:
    """Write a boolean mask as an 8-bit PNG, foreground white."""
    img = np.where(np.asarray(bits, dtype=bool), 255, 0).astype(np.uint8)
    Image.fromarray(img, mode="L").save(path, format="PNG")


def to_grayscale(f: Frame) -> GrayFrame:
    """BT.601 luma, real-valued and unrounded."""
    luma = f.pixels.astype(np.float64) @ LUMA_WEIGHTS
    # weights sum to 1 only up to rounding; keep saturated pixels at 255
    np.clip(luma, 0.0, 255.0, out=luma)
    return GrayFrame(luma, f.index)


def _parse_box_lines(lines: Iterable[str]) -> list[BoxRecord]:
    records = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ParseError(f"expected 6 comma-separated fields, got {len(parts)}", lineno)
        try:
            values = [int(p.strip()) for p in parts]
        except ValueError as exc:
            raise ParseError(f"non-integer field in {line!r}", lineno) from exc
        records.append(BoxRecord(*values))
    return records


def load_ground_truth(path) -> GroundTruth:
    """Read header-less ``frame_index,object_id,x,y,w,h`` lines."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        records = _parse_box_lines(fh)
    return GroundTruth(records)


def write_box_csv(records: Iterable[Sequence[int]], path) -> None:
    """Write box records sorted by frame then id, LF line endings."""
    rows = sorted(BoxRecord(*map(int, r)) for r in records)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in rows:
            fh.write(",".join(str(v) for v in r) + "\n")


def _clamp_box(box, width, height):
    x, y, w, h = (int(v) for v in box)
    x0 = min(max(x, 0), width - 1)
    y0 = min(max(y, 0), height - 1)
    x1 = min(max(x + w - 1, 0), width - 1)
    y1 = min(max(y + h - 1, 0), height - 1)
    return x0, y0, x1, y1


def _label_font():
    # bitmap font keeps output identical across FreeType builds
    if hasattr(ImageFont, "load_default_imagefont"):
        return ImageFont.load_default_imagefont()
    return ImageFont.load_default()


def annotate(f: Frame, tracks: Iterable[tuple[int, Sequence[int]]]) -> np.ndarray:
    """Return a copy of the frame with red 1-pixel box outlines and ids."""
    tracks = list(tracks)
    if not tracks:
        return np.array(f.pixels, copy=True)
    img = Image.fromarray(np.ascontiguousarray(f.pixels), mode="RGB")
    draw = ImageDraw.Draw(img)
    draw.fontmode = "1"  # no anti-aliasing: labels stay pure red
    font = _label_font()
    for track_id, box in tracks:
        x0, y0, x1, y1 = _clamp_box(box, f.width, f.height)
        label = str(track_id)
        # label sits just above the corner when there is room, else just inside
        ty = y0 - 11 if y0 >= 11 else y0 + 2
        draw.text((x0 + 1, ty), label, fill=BOX_COLOR, font=font)
    # outlines last so labels never cover them
    for track_id, box in tracks:
        x0, y0, x1, y1 = _clamp_box(box, f.width, f.height)
        draw.rectangle((x0, y0, x1, y1), outline=BOX_COLOR, width=1)
    return np.asarray(img, dtype=np.uint8).copy()


def write_annotated_frame(f: Frame, tracks, path) -> None:
    out = annotate(f, tracks)
    Image.fromarray(out, mode="RGB").save(os.fspath(path), format="PNG")
