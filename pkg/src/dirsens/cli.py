"""Command-line front end: ``dirsens analyze <plan-file>``."""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from . import __version__
from .engine import clear_record_callbacks, set_record_callback
from .errors import DirsensError, ParseError, PlanError, ReportIOError
from .plan import load_plan, run_plan
from .report import CheckRecord, ReportFormat, emit
from .utils import format_vector

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATED = 2


def _parse_args(argv: Optional[Sequence[str]]) -> argparse.Namespace:
    ap = argparse.ArgumentParser(
        prog="dirsens",
        description="Directional variational analysis of parametric value functions",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)

    analyze = sub.add_parser("analyze", help="Run an analysis plan and write reports")
    analyze.add_argument("plan", type=Path, help="Plan file")
    analyze.add_argument("--out", type=Path, default=Path("."), help="Output directory")
    analyze.add_argument(
        "--format",
        dest="formats",
        action="append",
        choices=[f.value for f in ReportFormat],
        help="Report format; repeat for several (default: all)",
    )
    analyze.add_argument("--seed", type=int, help="Scrambling seed for sampled directions")
    analyze.add_argument("--grid", type=int, help="Grid points per decision coordinate")
    analyze.add_argument("--shells", type=int, help="Number of shells K")
    analyze.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG"
    )
    return ap.parse_args(list(argv) if argv is not None else None)


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _progress(record: CheckRecord) -> None:
    logger.info(
        f"[{record.direction_index}] {record.check.value} u={format_vector(record.direction)} "
        f"-> {record.verdict or record.status}"
    )


def analyze(args: argparse.Namespace) -> int:
    plan = load_plan(args.plan).with_overrides(seed=args.seed, grid=args.grid, shells=args.shells)
    set_record_callback(_progress)
    try:
        report = run_plan(plan)
    finally:
        clear_record_callbacks()
    formats: List[str] = args.formats or [f.value for f in ReportFormat]
    emit(report, formats, args.out, stem=args.plan.stem)
    for record in report.errors:
        logger.warning(f"{record.check.value} u={format_vector(record.direction)}: {record.message}")
    return EXIT_VIOLATED if report.violated else EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = _parse_args(argv)
    _configure_logging(args.verbose)
    try:
        if args.cmd == "analyze":
            return analyze(args)
        return EXIT_ERROR
    except ParseError as e:
        print(f"dirsens: parse error: {e}", file=sys.stderr)
    except (PlanError, ReportIOError) as e:
        print(f"dirsens: {e}", file=sys.stderr)
    except DirsensError as e:
        print(f"dirsens: {type(e).__name__}: {e}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
