"""
Command line entry point:

    python -m isomonodromy_check {flow,lax-check,prlg,psi} --config run.json
"""

# Standard
from typing import List, Optional
import argparse
import os
import sys

# First Party
import alog

# Local
from .harness import COMMANDS, MUTATIONS, run


def _steps(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"Bad step list {text!r}: {err}") from err


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isomonodromy_check",
        description="Numerical certification of an isomonodromic construction",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", required=True, help="JSON run configuration")
        sub.add_argument("--out", default=None, help="Output directory")
        sub.add_argument(
            "--mutate",
            default=None,
            choices=MUTATIONS[name],
            help="Negative control to inject",
        )
        sub.add_argument(
            "--steps", type=_steps, default=None, help="Comma separated step sizes"
        )
        sub.add_argument(
            "--log-level", default=os.environ.get("LOG_LEVEL", "info")
        )
        sub.add_argument(
            "--log-filters", default=os.environ.get("LOG_FILTERS", "")
        )
        sub.add_argument(
            "--log-json",
            action="store_true",
            default=os.environ.get("LOG_JSON", "").lower() == "true",
        )
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    alog.configure(
        default_level=args.log_level,
        filters=args.log_filters,
        formatter="json" if args.log_json else "pretty",
        thread_id=os.environ.get("LOG_THREAD_ID", "").lower() == "true",
    )
    return run(args.command, args.config, args.out, args.mutate, args.steps)


if __name__ == "__main__":
    sys.exit(main())
