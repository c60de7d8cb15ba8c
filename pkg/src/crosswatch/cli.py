"""Command line driver: detect, evaluate, generate.

Exit codes: 0 success, 1 usage error, 2 data error (malformed or
inconsistent inputs), 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .detector import ExposureDetector
from .evaluate import DomainMismatchError, score_by_stream
from .exposure import InvariantViolationError
from .frames import FrameFormatError, read_frames, write_frames
from .layout import LayoutError, parse_layout
from .reports import (
    ReportFormatError,
    events_csv,
    flags_csv,
    periods_csv,
    read_annotations_csv,
    read_flags_csv,
    scores_csv,
)
from .scenario import ScenarioError, parse_scenario, render

OK = 0
USAGE_ERROR = 1
DATA_ERROR = 2
INTERNAL_ERROR = 3

log = logging.getLogger("crosswatch")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="crosswatch", description=__doc__)
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    detect = sub.add_parser("detect", help="run detection over a frame stream")
    detect.add_argument("--layout", required=True, help="layout document path")
    detect.add_argument("--frames", required=True, help="frame stream path")
    detect.add_argument("--out", required=True, help="output directory")
    detect.add_argument("--period", type=int, help="reporting period override (seconds)")
    detect.add_argument("--moving-threshold", type=int, help="moving group size override")
    detect.add_argument("--stationary-threshold", type=int, help="stationary group size override")
    detect.add_argument("--verbose", action="store_true")

    evaluate = sub.add_parser("evaluate", help="score a flags log against annotations")
    evaluate.add_argument("--flags", required=True, help="detector flags log path")
    evaluate.add_argument("--annotations", required=True, help="ground-truth annotations path")
    evaluate.add_argument("--target", required=True, choices=["Y", "Ym"])
    evaluate.add_argument("--out", required=True, help="output directory")
    evaluate.add_argument("--verbose", action="store_true")

    generate = sub.add_parser("generate", help="render a scenario into frames plus ground truth")
    generate.add_argument("--scenario", required=True, help="scenario document path")
    generate.add_argument("--out", required=True, help="output directory")
    generate.add_argument("--seed", type=int, help="noise seed override")
    generate.add_argument("--verbose", action="store_true")

    return parser


def _read_text(path: str, what: str) -> str:
    p = Path(path)
    if not p.is_file():
        print(f"crosswatch: {what} not found: {path}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)
    return p.read_text(encoding="utf-8")


def _write(out_dir: Path, name: str, text: str) -> None:
    (out_dir / name).write_text(text, encoding="utf-8", newline="")


def _cmd_detect(args) -> int:
    layout_text = _read_text(args.layout, "layout")
    frames_text = _read_text(args.frames, "frame stream")
    layout = parse_layout(layout_text).with_overrides(
        moving_threshold=args.moving_threshold,
        stationary_threshold=args.stationary_threshold,
        period=args.period,
    )
    detector = ExposureDetector(layout=layout).fit()
    result = detector.process(read_frames(frames_text, layout))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write(out_dir, "flags.csv", flags_csv(result.flags))
    _write(out_dir, "events.csv", events_csv(result.events))
    _write(out_dir, "periods.csv", periods_csv(result.periods))
    log.info(
        "processed %d frames: %d crossing records, %d period rows, %d diagnostics",
        result.n_frames, len(result.events), len(result.periods), len(result.diagnostics),
    )
    return OK


def _cmd_evaluate(args) -> int:
    flags = read_flags_csv(_read_text(args.flags, "flags log"))
    annotations = read_annotations_csv(_read_text(args.annotations, "annotations"))
    counts = score_by_stream(flags, annotations, args.target)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write(out_dir, "scores.csv", scores_csv(counts, args.target))
    return OK


def _cmd_generate(args) -> int:
    scenario_path = Path(args.scenario)
    spec = parse_scenario(_read_text(args.scenario, "scenario"))
    if args.seed is not None:
        spec.seed = args.seed
    if spec.layout_path is None:
        print("crosswatch: scenario does not name a layout", file=sys.stderr)
        return DATA_ERROR
    layout_path = scenario_path.parent / spec.layout_path
    layout = parse_layout(_read_text(str(layout_path), "layout"))
    rendered = render(spec, layout)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write(out_dir, "frames.txt", write_frames(rendered.frames, layout))
    _write(out_dir, "truth_flags.csv", flags_csv(rendered.truth_flags))
    _write(out_dir, "truth_periods.csv", periods_csv(rendered.truth_periods))
    return OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    handlers = {"detect": _cmd_detect, "evaluate": _cmd_evaluate, "generate": _cmd_generate}
    try:
        return handlers[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    except (
        LayoutError,
        FrameFormatError,
        ScenarioError,
        ReportFormatError,
        DomainMismatchError,
    ) as exc:
        print(f"crosswatch: {exc}", file=sys.stderr)
        return DATA_ERROR
    except InvariantViolationError as exc:
        print(f"crosswatch: internal invariant violation: {exc}", file=sys.stderr)
        return INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
