"""Nearest-neighbour blob association with persistent identities.

Detections in a frame are matched to the live tracks by Chi-Square
feature dissimilarity.  All admissible (track, detection) pairs are sorted
by distance and consumed greedily, so the closest pair anywhere in the
frame is always committed first.  Unmatched detections open new tracks;
unmatched tracks accumulate misses and are retired once they exceed the
miss budget.  Ids are issued from 1 upwards and never reused.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateDenominatorError, OrderingError, ValidationError
from .moments import N_FEATURES, FeatureVector

DISTANCE_MODES = ("strict", "robust")

_TINY = math.ulp(0.0)

ACTIVE = "active"
EXITED = "exited"


@dataclass(frozen=True)
class TrackerParams:
    distance_mode: str = "robust"
    epsilon: float = 1e-9
    tau_new: float = 1e6
    k_miss: int = 0
    normalize: bool = False

    def __post_init__(self):
        if self.distance_mode not in DISTANCE_MODES:
            raise ValidationError(
                f"distance_mode must be one of {DISTANCE_MODES}, got {self.distance_mode!r}"
            )
        if not self.epsilon > 0:
            raise ValidationError(f"tracker epsilon must be > 0, got {self.epsilon}")
        if not self.tau_new > 0:
            raise ValidationError(f"tau_new must be > 0, got {self.tau_new}")
        if int(self.k_miss) != self.k_miss or self.k_miss < 0:
            raise ValidationError(f"k_miss must be a non-negative integer, got {self.k_miss}")


@dataclass
class Track:
    id: int
    features: FeatureVector
    bbox: tuple[int, int, int, int]
    last_seen: int
    misses: int = 0
    status: str = ACTIVE


@dataclass
class Detection:
    """A blob's features and box as handed to the tracker."""

    label: int
    features: FeatureVector
    bbox: tuple[int, int, int, int]


@dataclass
class AssociationResult:
    """Outcome of one association round.

    ``matches`` holds ``(track_id, blob_label, distance)``; ``new_tracks``
    the labels of unmatched detections and, after :meth:`Tracker.step`,
    ``new_ids`` the ids issued to them in the same order.
    """

    matches: list[tuple[int, int, float]] = field(default_factory=list)
    new_tracks: list[int] = field(default_factory=list)
    exited: list[int] = field(default_factory=list)
    new_ids: list[int] = field(default_factory=list)

    def assignments(self) -> dict[int, int]:
        """Blob label -> track id for every detection placed this round."""
        out = {label: tid for tid, label, _ in self.matches}
        out.update(zip(self.new_tracks, self.new_ids))
        return out


def _as_array(v) -> np.ndarray:
    if isinstance(v, FeatureVector):
        return v.values
    arr = np.asarray(v, dtype=np.float64)
    if arr.shape != (N_FEATURES,):
        raise ValidationError(f"feature vector must have {N_FEATURES} values, got {arr.shape}")
    return arr


def chi_square_distance(a, b, mode: str = "robust", epsilon: float = 1e-9) -> float:
    """Chi-Square dissimilarity of two 16-feature vectors.

    ``strict`` evaluates ``sum (a-b)^2 / (a+b)`` as written, treating a
    ``0/0`` term as 0 and raising on any other denominator smaller than
    ``epsilon`` in magnitude.  ``robust`` uses ``|a| + |b| + epsilon`` and is
    a proper non-negative, symmetric dissimilarity for signed features.
    """
    a = _as_array(a)
    b = _as_array(b)
    diff = a - b
    num = diff * diff
    if mode == "robust":
        d = float(np.sum(num / (np.abs(a) + np.abs(b) + epsilon)))
        if d == 0.0 and diff.any():
            # true value underflows; keep it distinguishable from a == b
            return _TINY
        return d
    if mode != "strict":
        raise ValidationError(f"unknown distance mode {mode!r}")
    den = a + b
    both_zero = (a == 0) & (b == 0)
    bad = (np.abs(den) < epsilon) & ~both_zero
    if bad.any():
        i = int(np.argmax(bad))
        raise DegenerateDenominatorError(i, float(den[i]))
    terms = np.divide(num, den, out=np.zeros_like(num), where=~both_zero)
    return float(terms.sum())


def associate(
    tracks: Sequence[Track],
    detections: Sequence,
    params: TrackerParams | None = None,
) -> AssociationResult:
    """Greedy global nearest-neighbour assignment.

    ``detections`` may be :class:`Detection` objects or bare feature
    vectors; for the latter the list index stands in for the blob label.
    """
    params = params or TrackerParams()
    feats, labels = [], []
    for i, d in enumerate(detections):
        if isinstance(d, Detection):
            feats.append(d.features)
            labels.append(d.label)
        else:
            feats.append(d)
            labels.append(i)

    pairs = []
    for t in tracks:
        for j, fv in enumerate(feats):
            dist = chi_square_distance(t.features, fv, params.distance_mode, params.epsilon)
            if dist <= params.tau_new:
                pairs.append((dist, t.id, j))
    pairs.sort()

    used_tracks, used_dets = set(), set()
    result = AssociationResult()
    for dist, tid, j in pairs:
        if tid in used_tracks or j in used_dets:
            continue
        used_tracks.add(tid)
        used_dets.add(j)
        result.matches.append((tid, labels[j], dist))
    result.new_tracks = [labels[j] for j in range(len(feats)) if j not in used_dets]
    return result


class RunningScale:
    """Per-feature running mean and variance (Welford) for z-scaling."""

    def __init__(self):
        self.n = 0
        self.mean = np.zeros(N_FEATURES)
        self.m2 = np.zeros(N_FEATURES)

    def update(self, v: np.ndarray) -> None:
        self.n += 1
        delta = v - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (v - self.mean)

    def transform(self, v: np.ndarray) -> np.ndarray:
        if self.n < 2:
            return v - self.mean
        std = np.sqrt(self.m2 / self.n)
        std[std == 0] = 1.0
        return (v - self.mean) / std


class Tracker:
    """Sequential tracker state; feed one frame at a time via :meth:`step`."""

    def __init__(self, params: TrackerParams | None = None):
        self.params = params or TrackerParams()
        self.tracks: dict[int, Track] = {}
        self.next_id = 1
        self.last_frame: int | None = None
        self._scale = RunningScale() if self.params.normalize else None

    @property
    def active(self) -> list[Track]:
        return [t for t in self.tracks.values() if t.status == ACTIVE]

    def _scaled(self, fv: FeatureVector) -> FeatureVector:
        return FeatureVector(self._scale.transform(fv.values), fv.area)

    def step(self, detections: Sequence[Detection], frame_index: int) -> AssociationResult:
        if self.last_frame is not None and frame_index <= self.last_frame:
            raise OrderingError(
                f"frame {frame_index} does not follow frame {self.last_frame}"
            )
        self.last_frame = frame_index
        live = sorted(self.active, key=lambda t: t.id)

        if self._scale is not None:
            for d in detections:
                self._scale.update(d.features.values)
            # match in z-scaled space; stored features stay raw
            scaled_tracks = [
                Track(t.id, self._scaled(t.features), t.bbox, t.last_seen, t.misses)
                for t in live
            ]
            scaled_dets = [
                Detection(d.label, self._scaled(d.features), d.bbox) for d in detections
            ]
            result = associate(scaled_tracks, scaled_dets, self.params)
        else:
            result = associate(live, detections, self.params)

        by_label = {d.label: d for d in detections}
        matched = set()
        for tid, label, _ in result.matches:
            t = self.tracks[tid]
            d = by_label[label]
            t.features = d.features
            t.bbox = tuple(d.bbox)
            t.last_seen = frame_index
            t.misses = 0
            matched.add(tid)
        for t in live:
            if t.id in matched:
                continue
            t.misses += 1
            if t.misses > self.params.k_miss:
                t.status = EXITED
                result.exited.append(t.id)
        for label in result.new_tracks:
            d = by_label[label]
            tid = self.next_id
            self.next_id += 1
            self.tracks[tid] = Track(tid, d.features, tuple(d.bbox), frame_index)
            result.new_ids.append(tid)
        return result

    def observed(self, frame_index: int) -> list[tuple[int, tuple[int, int, int, int]]]:
        """``(track_id, bbox)`` for tracks that were placed at ``frame_index``."""
        return sorted(
            (t.id, t.bbox)
            for t in self.tracks.values()
            if t.last_seen == frame_index and t.misses == 0
        )
