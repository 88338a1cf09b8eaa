import argparse
import json
import logging
from pathlib import Path

from app.services.config_parser import parse_config
from app.services.runner import run
from app.settings import OUTPUT_DIR

logger = logging.getLogger(__name__)


def handle(args: argparse.Namespace) -> int:
    params = parse_config(args.config)
    out_dir = args.out or Path(OUTPUT_DIR) / Path(args.config).stem
    manifest = run(params, out_dir)
    print(json.dumps({"out": str(out_dir), **manifest["derived"], "status": manifest["status"]}))
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("run", help="evolve one experiment config")
    parser.add_argument("config", type=Path)
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.set_defaults(func=handle)
