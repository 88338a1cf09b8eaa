import argparse
import logging
from pathlib import Path

from app.core.errors import ConfigSyntaxError
from app.services.config_parser import parse_config
from app.services.runner import sweep
from app.settings import OUTPUT_DIR, SWEEP_CAP, SWEEP_WORKERS

logger = logging.getLogger(__name__)


def parse_axis(text: str) -> tuple[str, list[str]]:
    """``section.key=v1,v2,...``"""
    if "=" not in text:
        raise ConfigSyntaxError(f"axis {text!r} is not of the form key=v1,v2")
    name, values = text.split("=", 1)
    items = [v.strip() for v in values.split(",") if v.strip()]
    if not name.strip() or not items:
        raise ConfigSyntaxError(f"axis {text!r} needs a key and at least one value")
    return name.strip(), items


def handle(args: argparse.Namespace) -> int:
    base = parse_config(args.config)
    axes: dict[str, list[str]] = {}
    for text in args.axis:
        name, values = parse_axis(text)
        if name in axes:
            raise ConfigSyntaxError(f"axis {name!r} given twice")
        axes[name] = values
    out_dir = args.out or Path(OUTPUT_DIR) / f"{Path(args.config).stem}-sweep"
    rows = sweep(
        base, axes, out_dir,
        workers=args.workers, cap=args.cap, classify_only=args.classify_only,
    )
    for row in rows:
        print(f"{row['point']}\t{row['label']}\t{row['status']}")
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("sweep", help="cartesian parameter sweep with a regime map")
    parser.add_argument("config", type=Path)
    parser.add_argument("--axis", action="append", default=[], metavar="KEY=V1,V2")
    parser.add_argument("--workers", type=int, default=SWEEP_WORKERS)
    parser.add_argument("--cap", type=int, default=SWEEP_CAP)
    parser.add_argument("--classify-only", action="store_true", help="skip the evolutions")
    parser.add_argument("--out", type=Path, default=None)
    parser.set_defaults(func=handle)
