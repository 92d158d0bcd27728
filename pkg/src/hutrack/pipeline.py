"""Frame-sequence pipeline: segmentation, morphology, features, tracking.

Frame ``t`` is segmented from the pair ``(t-1, t)``, so the first frame of
a sequence only serves as a reference and tracking starts at frame 1.
Per-frame analysis (decode, segmentation, morphology, feature extraction)
is independent across frames and may run on a thread pool; tracker steps
always run in frame order on the calling thread.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from PIL import Image

from .config import PipelineConfig
from .frame_io import (
    BoxRecord,
    Frame,
    GrayFrame,
    list_frames,
    load_frame,
    save_mask,
    to_grayscale,
    write_annotated_frame,
    write_box_csv,
)
from .moments import FeatureVector, extract_features, write_feature_report
from .morphology import (
    Blob,
    connected_components,
    erode,
    fill_holes,
    filter_by_area,
    label_colors,
    scaled_min_area,
)
from .segmentation import BinaryMask, motion_mask
from .tracker import Detection, Tracker

log = logging.getLogger(__name__)

STAGES = ("Segmentation", "Morphology", "Tracking")
STAGE_LABELS = {
    "Segmentation": "Motion segmentation (two frames)",
    "Morphology": "Blob hole filling and morphological processing",
    "Tracking": "Feature extraction and tracking",
}


class PipelineError(RuntimeError):
    """A module failed on a specific frame and stage."""

    def __init__(self, frame_index: int, stage: str, cause: BaseException):
        self.frame_index = frame_index
        self.stage = stage
        self.cause = cause
        super().__init__(f"frame {frame_index}, stage {stage}: {cause}")


class NotEnoughFrames(ValueError):
    pass


@dataclass
class FrameAnalysis:
    index: int
    name: str
    frame: Frame
    raw_mask: BinaryMask
    clean_mask: BinaryMask
    blobs: list[Blob]
    features: list[FeatureVector]
    seconds: dict[str, float] = field(default_factory=dict)

    def detections(self) -> list[Detection]:
        return [Detection(b.label, fv, b.bbox) for b, fv in zip(self.blobs, self.features)]


@dataclass
class RunSummary:
    frames: int
    track_records: list[BoxRecord]
    stage_ms: dict[str, float]
    ids_issued: int

    def timing_text(self) -> str:
        lines = ["Stage                                            ms/frame"]
        for stage in STAGES:
            lines.append(f"{STAGE_LABELS[stage]:<48} {self.stage_ms[stage]:8.3f}")
        lines.append(f"{'Total':<48} {self.stage_ms['Total']:8.3f}")
        lines.append(f"{'Decode (not in total)':<48} {self.stage_ms['Decode']:8.3f}")
        lines.append(f"frames tracked: {self.frames}")
        return "\n".join(lines) + "\n"


def _stage(index: int, name: str, fn: Callable, *args):
    try:
        return fn(*args)
    except Exception as exc:  # noqa: BLE001 - re-raised with frame context
        raise PipelineError(index, name, exc) from exc


def clean_mask(mask: BinaryMask, cfg: PipelineConfig) -> BinaryMask:
    return erode(fill_holes(mask), cfg.morphology.erode_iterations)


def analyze_pair(
    index: int,
    name: str,
    prev_gray: GrayFrame,
    frame: Frame,
    gray: GrayFrame,
    cfg: PipelineConfig,
    min_area: int,
) -> FrameAnalysis:
    """Segment, clean, label and describe one frame against its predecessor."""
    sec = {}
    t0 = time.perf_counter()
    raw = _stage(index, "segmentation", motion_mask, prev_gray, gray, cfg.segmentation)
    t1 = time.perf_counter()
    cleaned = _stage(index, "morphology", clean_mask, raw, cfg)
    blobs = _stage(index, "morphology", connected_components, cleaned)
    blobs = filter_by_area(blobs, min_area)
    t2 = time.perf_counter()
    hu_mode = cfg.features.hu_transform
    feats = [_stage(index, "features", extract_features, frame, b, hu_mode) for b in blobs]
    t3 = time.perf_counter()
    sec["Segmentation"] = t1 - t0
    sec["Morphology"] = t2 - t1
    sec["Features"] = t3 - t2
    return FrameAnalysis(index, name, frame, raw, cleaned, blobs, feats, sec)


def _load(index: int, path: Path) -> tuple[Frame, GrayFrame, float]:
    t0 = time.perf_counter()
    frame = _stage(index, "decode", load_frame, path, index)
    gray = _stage(index, "segmentation", to_grayscale, frame)
    return frame, gray, time.perf_counter() - t0


def iter_analyses(paths: list[Path], cfg: PipelineConfig, jobs: int = 1):
    """Yield :class:`FrameAnalysis` for frames ``1..n-1`` in order.

    Each result carries its decode time under ``seconds['Decode']``.
    """
    if len(paths) < 2:
        raise NotEnoughFrames(f"need at least 2 frames, found {len(paths)}")
    first, prev_gray, _ = _load(0, paths[0])
    min_area = cfg.morphology.min_area
    if cfg.morphology.scale_min_area:
        min_area = scaled_min_area(min_area, first.width, first.height)

    def work(i: int) -> FrameAnalysis:
        _, pg, _ = _load(i - 1, paths[i - 1])
        frame, gray, dec = _load(i, paths[i])
        res = analyze_pair(i, paths[i].stem, pg, frame, gray, cfg, min_area)
        res.seconds["Decode"] = dec
        return res

    if jobs <= 1:
        for i in range(1, len(paths)):
            frame, gray, dec = _load(i, paths[i])
            res = analyze_pair(i, paths[i].stem, prev_gray, frame, gray, cfg, min_area)
            res.seconds["Decode"] = dec
            prev_gray = gray
            yield res
        return

    window = 4 * jobs
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for start in range(1, len(paths), window):
            stop = min(start + window, len(paths))
            yield from pool.map(work, range(start, stop))


def run(input_dir, cfg: PipelineConfig, out_dir, jobs: int = 1) -> RunSummary:
    """Track every frame of ``input_dir`` and write artifacts to ``out_dir``.

    Writes ``tracks.csv`` and ``timing.txt``; depending on ``cfg.output``
    also ``annotated/``, ``masks/`` and ``blobs/`` PNG dumps,
    ``features.csv`` and ``associations.csv``.
    """
    paths = list_frames(input_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    opts = cfg.output
    for sub, on in (("annotated", opts.annotated), ("masks", opts.masks), ("blobs", opts.masks)):
        if on:
            (out / sub).mkdir(exist_ok=True)

    tracker = Tracker(cfg.tracker)
    records: list[BoxRecord] = []
    feature_rows = []
    assoc_lines = []
    totals = {s: 0.0 for s in STAGES + ("Decode",)}
    n = 0
    for res in iter_analyses(paths, cfg, jobs):
        n += 1
        t0 = time.perf_counter()
        try:
            result = tracker.step(res.detections(), res.index)
        except Exception as exc:  # noqa: BLE001
            raise PipelineError(res.index, "tracking", exc) from exc
        observed = tracker.observed(res.index)
        totals["Tracking"] += res.seconds["Features"] + time.perf_counter() - t0
        totals["Segmentation"] += res.seconds["Segmentation"]
        totals["Morphology"] += res.seconds["Morphology"]
        totals["Decode"] += res.seconds["Decode"]

        records.extend(BoxRecord(res.index, tid, *box) for tid, box in observed)
        if opts.features:
            feature_rows.extend((res.index, b.label, fv) for b, fv in zip(res.blobs, res.features))
        if opts.associations:
            for tid, label, dist in sorted(result.matches):
                assoc_lines.append(f"{res.index},{tid},{label},{dist!r}")
        try:
            if opts.annotated:
                write_annotated_frame(res.frame, observed, out / "annotated" / f"{res.name}.png")
            if opts.masks:
                save_mask(res.raw_mask.bits, out / "masks" / f"{res.name}.png")
                Image.fromarray(label_colors(res.clean_mask), mode="RGB").save(
                    out / "blobs" / f"{res.name}.png"
                )
        except OSError as exc:
            raise PipelineError(res.index, "output", exc) from exc
        log.debug("frame %d: %d blobs, %d tracks", res.index, len(res.blobs), len(observed))

    write_box_csv(records, out / "tracks.csv")
    if opts.features:
        write_feature_report(feature_rows, out / "features.csv")
    if opts.associations:
        with open(out / "associations.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("frame_index,track_id,blob_label,distance\n")
            fh.writelines(line + "\n" for line in assoc_lines)

    stage_ms = {k: 1000.0 * v / max(n, 1) for k, v in totals.items()}
    stage_ms["Total"] = sum(stage_ms[s] for s in STAGES)
    summary = RunSummary(n, records, stage_ms, tracker.next_id - 1)
    (out / "timing.txt").write_text(summary.timing_text(), encoding="utf-8")
    return summary


def segment_only(input_dir, cfg: PipelineConfig, out_dir, jobs: int = 1) -> int:
    """Write raw and cleaned masks for frames ``1..n-1``; returns frame count."""
    paths = list_frames(input_dir)
    out = Path(out_dir)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    (out / "masks_clean").mkdir(exist_ok=True)
    n = 0
    for res in iter_analyses(paths, cfg, jobs):
        save_mask(res.raw_mask.bits, out / "masks" / f"{res.name}.png")
        save_mask(res.clean_mask.bits, out / "masks_clean" / f"{res.name}.png")
        n += 1
    return n


def features_only(input_dir, cfg: PipelineConfig, out_path, jobs: int = 1) -> int:
    """Write the feature report CSV; returns the number of blob rows."""
    paths = list_frames(input_dir)
    rows = []
    for res in iter_analyses(paths, cfg, jobs):
        rows.extend((res.index, b.label, fv) for b, fv in zip(res.blobs, res.features))
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    write_feature_report(rows, out_path)
    return len(rows)
