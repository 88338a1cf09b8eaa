import argparse
from pathlib import Path

from app.services.config_parser import parse_config
from app.services.runner import summarize


def handle(args: argparse.Namespace) -> int:
    summary = summarize(parse_config(args.config))
    for key, value in summary.as_dict().items():
        print(f"{key} = {value}")
    for criterion in summary.regime.rationale:
        verdict = "yes" if criterion.passed else "no"
        print(f"  {criterion.name} {criterion.comparison} {criterion.threshold:g}: "
              f"{criterion.value:.4g} ({verdict})")
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("validate", help="check a config and print derived quantities")
    parser.add_argument("config", type=Path)
    parser.set_defaults(func=handle)
