"""Mask cleanup and blob extraction.

Foreground is 8-connected and background 4-connected, so a hole is any
background region that cannot reach the frame border through 4-neighbour
steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from .segmentation import BinaryMask

SQUARE_3X3 = np.ones((3, 3), dtype=bool)
CROSS_3X3 = ndimage.generate_binary_structure(2, 1)

# min_area defaults are stated for this frame size
REFERENCE_AREA = 360 * 240


@dataclass(frozen=True, eq=False)
class Blob:
    """One 8-connected foreground component.

    ``xs``/``ys`` hold integer column/row coordinates of the member pixels
    in raster order.  ``bbox`` is ``(x, y, w, h)``.
    """

    label: int
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.array(self.xs, dtype=np.int64, copy=True)
        ys = np.array(self.ys, dtype=np.int64, copy=True)
        if xs.shape != ys.shape or xs.ndim != 1 or xs.size == 0:
            raise ValidationError("blob needs matching, non-empty coordinate arrays")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def from_pixels(cls, label: int, pixels: Iterable[tuple[int, int]]) -> "Blob":
        """Build from ``(x, y)`` pairs, ordered by row then column."""
        pts = sorted(set((int(x), int(y)) for x, y in pixels), key=lambda p: (p[1], p[0]))
        if not pts:
            raise ValidationError("blob needs at least one pixel")
        xs, ys = zip(*pts)
        return cls(label, np.array(xs), np.array(ys))

    @property
    def area(self) -> int:
        return int(self.xs.size)

    @property
    def pixels(self) -> set[tuple[int, int]]:
        return set(zip(self.xs.tolist(), self.ys.tolist()))

    @property
    def bbox(self) -> tuple[int, int, int, int]:
        x0, x1 = int(self.xs.min()), int(self.xs.max())
        y0, y1 = int(self.ys.min()), int(self.ys.max())
        return (x0, y0, x1 - x0 + 1, y1 - y0 + 1)

    @property
    def centroid(self) -> tuple[float, float]:
        n = self.area
        # integer sums divided once: exactly rounded
        return (int(self.xs.sum()) / n, int(self.ys.sum()) / n)


def fill_holes(m: BinaryMask) -> BinaryMask:
    """Set every background pixel not 4-connected to the border."""
    filled = ndimage.binary_fill_holes(m.bits, structure=CROSS_3X3)
    return BinaryMask(filled, m.frame_index)


def erode(m: BinaryMask, iterations: int = 1) -> BinaryMask:
    """Binary erosion by a 3x3 square, outside-of-frame counted as background."""
    if int(iterations) != iterations or iterations < 1:
        raise ValidationError(f"erosion iterations must be a positive integer, got {iterations}")
    out = ndimage.binary_erosion(
        m.bits, structure=SQUARE_3X3, iterations=int(iterations), border_value=0
    )
    return BinaryMask(out, m.frame_index)


def label_image(m: BinaryMask) -> tuple[np.ndarray, int]:
    """8-connected label raster with labels in raster order of first pixel."""
    labels, n = ndimage.label(m.bits, structure=SQUARE_3X3)
    if n == 0:
        return labels, 0
    flat = labels.ravel()
    present, first = np.unique(flat, return_index=True)
    keep = present > 0
    present, first = present[keep], first[keep]
    order = present[np.argsort(first, kind="stable")]
    remap = np.zeros(n + 1, dtype=labels.dtype)
    remap[order] = np.arange(1, n + 1, dtype=labels.dtype)
    return remap[labels], n


def connected_components(m: BinaryMask) -> list[Blob]:
    labels, n = label_image(m)
    blobs = []
    for k, sl in enumerate(ndimage.find_objects(labels), start=1):
        ys, xs = np.nonzero(labels[sl] == k)
        blobs.append(Blob(k, xs + sl[1].start, ys + sl[0].start))
    return blobs


def filter_by_area(blobs: Iterable[Blob], min_area: int) -> list[Blob]:
    if min_area < 1:
        raise ValidationError(f"min_area must be positive, got {min_area}")
    return [b for b in blobs if b.area >= min_area]


def scaled_min_area(min_area: int, width: int, height: int) -> int:
    """Scale a 360x240-referenced area threshold to another frame size."""
    return max(1, int(round(min_area * (width * height) / REFERENCE_AREA)))


def label_colors(m: BinaryMask) -> np.ndarray:
    """Colour-coded RGB rendering of the blob labels, for debug dumps."""
    labels, n = label_image(m)
    rng = np.random.default_rng(0)
    palette = np.zeros((n + 1, 3), dtype=np.uint8)
    palette[1:] = rng.integers(64, 256, size=(n, 3), dtype=np.uint8)
    return palette[labels]
