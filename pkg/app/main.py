import argparse
import logging
import sys

from app.commands import preset, render, run, sweep, validate
from app.core.errors import SimulatorError
from app.core.logging import configure_logging
from app.settings import PROJECT_NAME, VERSION

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROJECT_NAME,
        description="Free-electron wavepacket diffraction by optical gratings",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument("--log-level", default=None, help="overrides FEQO_LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (run, preset, sweep, render, validate):
        command.register(subparsers)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except SimulatorError as exc:
        logger.error("%s failed: %s", args.command, exc.detail)
        print(f"error: {exc.detail}", file=sys.stderr)
        return exc.exit_code
    except Exception:
        logger.exception("Unexpected error in %s", args.command)
        return 1


if __name__ == "__main__":
    sys.exit(main())
