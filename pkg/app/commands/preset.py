import argparse
import json
import logging
from pathlib import Path

from app.schemas.experiment import PresetName
from app.services.config_parser import serialize_config
from app.services.presets import preset_params
from app.services.runner import run
from app.settings import OUTPUT_DIR

logger = logging.getLogger(__name__)


def handle(args: argparse.Namespace) -> int:
    params = preset_params(args.name)
    if args.emit_config:
        print(serialize_config(params), end="")
        return 0
    out_dir = args.out or Path(OUTPUT_DIR) / args.name
    manifest = run(params, out_dir)
    print(json.dumps({"out": str(out_dir), **manifest["derived"], "status": manifest["status"]}))
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("preset", help="run or print a built-in experiment")
    parser.add_argument("name", choices=[p.value for p in PresetName])
    parser.add_argument("--emit-config", action="store_true", help="print the config and exit")
    parser.add_argument("--out", type=Path, default=None)
    parser.set_defaults(func=handle)
