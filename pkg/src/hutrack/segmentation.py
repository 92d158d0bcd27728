"""Temporal motion segmentation with a 3x3 Chi-Square neighbourhood test.

For every interior pixel the luminance patches of two consecutive frames
are compared with the two-sample statistic

    sum_i (a_i - b_i)^2 / (a_i + b_i + epsilon)

over the nine co-located positions; the pixel is marked as moving when
the statistic exceeds the threshold.  The one-pixel frame border is always
background.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .frame_io import GrayFrame


@dataclass(frozen=True)
class SegmentationParams:
    threshold: float = 30.0
    epsilon: float = 1.0

    def __post_init__(self):
        if not self.threshold >= 0:
            raise ValidationError(f"segmentation threshold must be >= 0, got {self.threshold}")
        if not self.epsilon > 0:
            raise ValidationError(f"segmentation epsilon must be > 0, got {self.epsilon}")


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean foreground raster attributed to one frame."""

    bits: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool, copy=True)
        if bits.ndim != 2:
            raise DimensionError(f"mask must be 2-D, got shape {bits.shape}")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))


def chi_square_statistic(a, b, epsilon: float = 1.0) -> float:
    """Chi-Square statistic between two 3x3 luminance patches."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != (3, 3) or b.shape != (3, 3):
        raise DimensionError(f"patches must be 3x3, got {a.shape} and {b.shape}")
    den = a + b + epsilon
    diff = a - b
    # identical entries contribute nothing, even when the denominator is 0
    terms = np.divide(diff * diff, den, out=np.zeros_like(diff), where=diff != 0)
    return float(terms.sum())


def chi_square_field(prev: np.ndarray, cur: np.ndarray, epsilon: float) -> np.ndarray:
    """Per-pixel 3x3 statistic for the interior, zero on the border."""
    prev = np.asarray(prev, dtype=np.float64)
    cur = np.asarray(cur, dtype=np.float64)
    diff = prev - cur
    terms = np.divide(diff * diff, prev + cur + epsilon, out=np.zeros_like(diff), where=diff != 0)
    h, w = terms.shape
    stat = np.zeros_like(terms)
    inner = stat[1:-1, 1:-1]
    for dy in range(3):
        for dx in range(3):
            inner += terms[dy:h - 2 + dy, dx:w - 2 + dx]
    return stat


def motion_mask(g_prev: GrayFrame, g_cur: GrayFrame, params: SegmentationParams | None = None) -> BinaryMask:
    """Foreground mask for ``g_cur`` from the pair ``(g_prev, g_cur)``."""
    params = params or SegmentationParams()
    if g_prev.values.shape != g_cur.values.shape:
        raise DimensionError(
            f"frame sizes differ: {g_prev.width}x{g_prev.height} vs {g_cur.width}x{g_cur.height}"
        )
    if g_cur.width < 3 or g_cur.height < 3:
        raise DimensionError("frames must be at least 3x3")
    stat = chi_square_field(g_prev.values, g_cur.values, params.epsilon)
    bits = stat > params.threshold
    bits[0, :] = bits[-1, :] = False
    bits[:, 0] = bits[:, -1] = False
    return BinaryMask(bits, g_cur.index)
