"""Command-line entry point.

Subcommands::

    hutrack run --input DIR --out DIR [--config FILE] [--set K=V ...]
    hutrack evaluate --tracks CSV --gt CSV [--iou-threshold T] [--first-frame N] [--csv OUT]
    hutrack generate --script FILE --out DIR [--seed N]
    hutrack segment --input DIR --out DIR
    hutrack features --input DIR --out DIR

Exit status is 0 on success, 1 on a runtime failure and 2 on a usage or
validation error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import evaluation, pipeline, synth
from .config import load_config
from .errors import ParseError, ValidationError
from .frame_io import load_ground_truth

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _add_pipeline_options(p: argparse.ArgumentParser) -> None:
    # --input/--out are checked after --print-config has had its chance
    p.add_argument("--input", type=Path, help="directory of frame images")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--config", type=Path, help="flat 'section.key = value' config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="K=V",
                   help="override one config key (repeatable)")
    p.add_argument("--print-config", action="store_true",
                   help="print the effective configuration and exit")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for per-frame analysis")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hutrack", description="Multi-object blob tracking with colour and Hu moment features."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="track objects through a frame sequence")
    _add_pipeline_options(p)
    p.add_argument("--emit-masks", action="store_true", help="write mask and blob PNG dumps")
    p.add_argument("--emit-features", action="store_true", help="write features.csv")

    p = sub.add_parser("evaluate", help="score track output against ground truth")
    p.add_argument("--tracks", type=Path, required=True)
    p.add_argument("--gt", type=Path, required=True)
    p.add_argument("--iou-threshold", type=float, default=None,
                   help="match threshold (default: eval.iou_threshold from the config)")
    p.add_argument("--config", type=Path, help="config file supplying eval.iou_threshold")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="K=V")
    p.add_argument("--first-frame", type=int, default=None,
                   help="ignore frames before this index in both files")
    p.add_argument("--dataset", default=None, help="dataset name for the report row")
    p.add_argument("--scene", default="-")
    p.add_argument("--csv", type=Path, default=None, help="also write the report as CSV")

    p = sub.add_parser("generate", help="render a synthetic scene with ground truth")
    p.add_argument("--script", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("segment", help="write motion masks only")
    _add_pipeline_options(p)

    p = sub.add_parser("features", help="write the blob feature report only")
    _add_pipeline_options(p)
    return parser


def _config(args):
    try:
        return load_config(args.config, args.overrides)
    except ParseError as exc:
        raise ValidationError(f"{args.config}: {exc}") from exc


def _require_io(args) -> None:
    if args.input is None or args.out is None:
        raise ValidationError("--input and --out are required")


def cmd_run(args) -> int:
    cfg = _config(args)
    if args.emit_masks or args.emit_features:
        cfg = dataclasses.replace(cfg, output=dataclasses.replace(
            cfg.output,
            masks=cfg.output.masks or args.emit_masks,
            features=cfg.output.features or args.emit_features,
        ))
    if args.print_config:
        sys.stdout.write(cfg.to_text())
        return EXIT_OK
    _require_io(args)
    summary = pipeline.run(args.input, cfg, args.out, jobs=args.jobs)
    sys.stdout.write(summary.timing_text())
    print(f"tracks: {summary.ids_issued} ids issued, {len(summary.track_records)} boxes -> "
          f"{args.out / 'tracks.csv'}")
    return EXIT_OK


def cmd_segment(args) -> int:
    cfg = _config(args)
    if args.print_config:
        sys.stdout.write(cfg.to_text())
        return EXIT_OK
    _require_io(args)
    n = pipeline.segment_only(args.input, cfg, args.out, jobs=args.jobs)
    print(f"wrote masks for {n} frames to {args.out}")
    return EXIT_OK


def cmd_features(args) -> int:
    cfg = _config(args)
    if args.print_config:
        sys.stdout.write(cfg.to_text())
        return EXIT_OK
    _require_io(args)
    path = args.out / "features.csv"
    n = pipeline.features_only(args.input, cfg, path, jobs=args.jobs)
    print(f"wrote {n} blob feature rows to {path}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    threshold = args.iou_threshold
    if threshold is None:
        threshold = _config(args).eval.iou_threshold
    if not 0 < threshold <= 1:
        raise ValidationError(f"--iou-threshold must be in (0, 1], got {threshold}")
    try:
        tracks = load_ground_truth(args.tracks)
        gt = load_ground_truth(args.gt)
    except ValidationError as exc:
        raise ParseError(str(exc)) from exc
    report = evaluation.score(tracks, gt, threshold, first_frame=args.first_frame)
    row = evaluation.SequenceResult(
        dataset=args.dataset or args.gt.stem,
        scene=args.scene,
        objects=len(gt.object_ids()),
        precision=report.precision,
        recall=report.recall,
    )
    sys.stdout.write(evaluation.format_table([row]))
    print(f"correct {report.correct} / established {report.established} / actual {report.actual}")
    if args.csv:
        args.csv.write_text(evaluation.format_csv([row]), encoding="utf-8")
    return EXIT_OK


def cmd_generate(args) -> int:
    script = synth.load_script(args.script)
    frames, gt = synth.render(script, seed=args.seed)
    synth.write_scene(frames, gt, args.out)
    print(f"wrote {len(frames)} frames and {len(gt)} ground-truth boxes to {args.out}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "evaluate": cmd_evaluate,
    "generate": cmd_generate,
    "segment": cmd_segment,
    "features": cmd_features,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, pipeline.NotEnoughFrames) as exc:
        print(f"hutrack: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"hutrack: parse error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except pipeline.PipelineError as exc:
        print(f"hutrack: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"hutrack: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
