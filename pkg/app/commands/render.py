import argparse
from pathlib import Path

from app.services.heatmap import render_heatmap


def handle(args: argparse.Namespace) -> int:
    out = args.output or Path(args.grid).with_suffix(".ppm")
    render_heatmap(args.grid, out, cmap=args.cmap, log=args.log)
    print(out)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("render", help="colour-map a binary grid into a P6 pixmap")
    parser.add_argument("grid", type=Path)
    parser.add_argument("-o", "--output", type=Path, default=None)
    parser.add_argument("--log", action="store_true", help="symmetric-log normalisation")
    parser.add_argument("--cmap", default=None, help="matplotlib colour map name")
    parser.set_defaults(func=handle)
