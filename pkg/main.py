import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, TextIO

from config import LOG_FORMAT, LOG_LEVEL, OUTPUT_DIR, SEED, THREADS, TOLERANCE
from commands import COMMANDS, ScenarioRunner

logger = logging.getLogger("polygas")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=THREADS, help="worker threads for series sums")
    common.add_argument("--tolerance", type=float, default=TOLERANCE, help="numerical tolerance of checks")
    common.add_argument("--seed", type=int, default=SEED, help="seed of randomized checks")
    common.add_argument("--output", help="report file; relative paths land in the output directory")
    common.add_argument("--log-level", default=LOG_LEVEL, help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--no-timestamp", action="store_true", help="byte-reproducible reports")

    parser = argparse.ArgumentParser(
        prog="polygas", description="Cluster expansion toolkit for polymer gases"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command_class in COMMANDS:
        command = command_class()
        sub = subparsers.add_parser(command.command_name, help=command.description, parents=[common])
        command.add_arguments(sub)
        sub.set_defaults(handler=command)
    return parser


def _open_output(path: Optional[str]) -> TextIO:
    if not path:
        return sys.stdout
    target = Path(path)
    if not target.is_absolute():
        target = Path(OUTPUT_DIR) / target
    target.parent.mkdir(parents=True, exist_ok=True)
    return target.open("w")


def run(argv: List[str]) -> int:
    """Parse the command line, run one scenario and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # --help exits 0, usage errors exit 2
        return 0 if e.code in (0, None) else 2

    logging.basicConfig(format=LOG_FORMAT, stream=sys.stderr, level=args.log_level.upper(), force=True)
    try:
        out = _open_output(args.output)
    except OSError as e:
        logger.error(f"cannot open report file: {e}")
        return 2
    try:
        return ScenarioRunner(no_timestamp=args.no_timestamp).run(args.handler, args, out)
    finally:
        if out is not sys.stdout:
            out.close()


if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
