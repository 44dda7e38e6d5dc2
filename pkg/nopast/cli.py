import argparse
from typing import List, Optional

import toml

from nopast.compare import Compare
from nopast.run import Run
from nopast.summarize import Summarize
from nopast.utils import log
from nopast.utils.errors import ContractViolation

COMMANDS = (Run, Summarize, Compare)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nopast-cli",
        description="Portfolio Bayesian optimization experiments (GP-Hedge, No-PASt-BO)",
    )
    sub_parsers = parser.add_subparsers(dest="command_name", required=True)
    for command in COMMANDS:
        command.options(sub_parsers)
    return parser, sub_parsers


def _apply_config(sub_parser: argparse.ArgumentParser, path: str):
    values = toml.load(path)
    known = set(vars(sub_parser.parse_args([]))) - {"command"}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ContractViolation(f"Unknown keys {unknown} in {path}")
    sub_parser.set_defaults(**values)


def main(argv: Optional[List[str]] = None) -> int:
    parser, sub_parsers = build_parser()
    options = parser.parse_args(argv)
    if options.config:
        _apply_config(sub_parsers.choices[options.command_name], options.config)
        options = parser.parse_args(argv)

    command = options.command(options)
    log.setup(options.debug_mode, command.log_dir())
    command.run()
    return 0
