"""Correspondence precision and recall against ground truth.

A correspondence is one object carried from frame ``t`` to frame ``t+1``.
The tracker establishes one for every track id present in two consecutive
frames; the ground truth holds one for every object id present in two
consecutive frames.  A tracker correspondence is correct when both of its
boxes are matched (IoU at or above the threshold, best IoU wins, smaller
id breaks ties) to the same ground-truth object, and each ground-truth
correspondence can be credited at most once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .frame_io import GroundTruth

Box = tuple[int, int, int, int]


def iou(box_a: Sequence[float], box_b: Sequence[float]) -> float:
    ax, ay, aw, ah = box_a
    bx, by, bw, bh = box_b
    iw = min(ax + aw, bx + bw) - max(ax, bx)
    ih = min(ay + ah, by + bh) - max(ay, by)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (aw * ah + bw * bh - inter)


@dataclass
class SequenceResult:
    """One row of the report table."""

    dataset: str
    scene: str
    objects: int
    precision: float
    recall: float


@dataclass
class EvalReport:
    established: int
    correct: int
    actual: int
    precision: float
    recall: float
    rows: list[SequenceResult] = field(default_factory=list)


def _restrict(frames: dict[int, dict[int, Box]], first_frame, last_frame):
    return {
        f: boxes
        for f, boxes in frames.items()
        if (first_frame is None or f >= first_frame) and (last_frame is None or f <= last_frame)
    }


def _best_gt(box: Box, gt_boxes: dict[int, Box], threshold: float):
    best = None
    for gid, gbox in gt_boxes.items():
        v = iou(box, gbox)
        if v >= threshold and (best is None or (-v, gid) < (-best[0], best[1])):
            best = (v, gid)
    return None if best is None else best[1]


def _links(frames: dict[int, dict[int, Box]]) -> list[tuple[int, int]]:
    """``(id, t)`` for every id present at both ``t`` and ``t+1``."""
    out = []
    for f in sorted(frames):
        nxt = frames.get(f + 1)
        if not nxt:
            continue
        out.extend((oid, f) for oid in sorted(frames[f]) if oid in nxt)
    return out


def score(
    tracks: GroundTruth,
    gt: GroundTruth,
    iou_threshold: float = 0.5,
    first_frame: int | None = None,
    last_frame: int | None = None,
) -> EvalReport:
    """Score track output against ground truth.

    ``first_frame``/``last_frame`` clip both record sets to an inclusive
    frame window, e.g. the frames a tracker was actually run on.
    """
    if not 0 < iou_threshold <= 1:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    tr = _restrict(tracks.by_frame(), first_frame, last_frame)
    gf = _restrict(gt.by_frame(), first_frame, last_frame)

    assigned: dict[tuple[int, int], int | None] = {}

    def gt_of(tid, f):
        key = (tid, f)
        if key not in assigned:
            assigned[key] = _best_gt(tr[f][tid], gf.get(f, {}), iou_threshold)
        return assigned[key]

    established = _links(tr)
    actual = _links(gf)
    credited = set()
    correct = 0
    for tid, f in established:
        g0 = gt_of(tid, f)
        if g0 is None or g0 != gt_of(tid, f + 1):
            continue
        if (g0, f) in credited:
            continue
        credited.add((g0, f))
        correct += 1

    n_est, n_act = len(established), len(actual)
    return EvalReport(
        established=n_est,
        correct=correct,
        actual=n_act,
        precision=correct / n_est if n_est else 0.0,
        recall=correct / n_act if n_act else 0.0,
    )


def identity_coverage(
    tracks: GroundTruth,
    gt: GroundTruth,
    iou_threshold: float = 0.5,
    first_frame: int | None = None,
    last_frame: int | None = None,
) -> dict[int, set[int]]:
    """Ground-truth id -> set of track ids matched to it in any frame."""
    tr = _restrict(tracks.by_frame(), first_frame, last_frame)
    gf = _restrict(gt.by_frame(), first_frame, last_frame)
    cover: dict[int, set[int]] = {gid: set() for boxes in gf.values() for gid in boxes}
    for f, boxes in tr.items():
        for tid, box in boxes.items():
            gid = _best_gt(box, gf.get(f, {}), iou_threshold)
            if gid is not None:
                cover[gid].add(tid)
    return cover


def identity_switches(coverage: dict[int, set[int]]) -> int:
    return sum(max(len(tids) - 1, 0) for tids in coverage.values())


def average_row(rows: Sequence[SequenceResult]) -> SequenceResult:
    n = len(rows)
    return SequenceResult(
        dataset="Average",
        scene="",
        objects=sum(r.objects for r in rows),
        precision=sum(r.precision for r in rows) / n if n else 0.0,
        recall=sum(r.recall for r in rows) / n if n else 0.0,
    )


def format_table(rows: Iterable[SequenceResult]) -> str:
    """Aligned text table with a trailing Average row."""
    rows = list(rows)
    body = [(r.dataset, r.scene, f"{r.objects:02d}", f"{r.precision:.4f}", f"{r.recall:.4f}") for r in rows]
    avg = average_row(rows)
    body.append((avg.dataset, "", "", f"{avg.precision:.4f}", f"{avg.recall:.4f}"))
    header = ("Dataset", "Scene", "No. objects", "Precision", "Recall")
    widths = [max(len(row[i]) for row in [header] + body) for i in range(5)]
    lines = []
    for row in [header] + body:
        cells = [row[i].ljust(widths[i]) if i < 2 else row[i].rjust(widths[i]) for i in range(5)]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def format_csv(rows: Iterable[SequenceResult]) -> str:
    rows = list(rows)
    out = ["dataset,scene,objects,precision,recall"]
    for r in rows:
        out.append(f"{r.dataset},{r.scene},{r.objects},{r.precision:.4f},{r.recall:.4f}")
    avg = average_row(rows)
    out.append(f"Average,,,{avg.precision:.4f},{avg.recall:.4f}")
    return "\n".join(out) + "\n"
