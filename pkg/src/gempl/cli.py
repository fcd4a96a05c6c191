"""
Command-line entry point::

    gempl <command> [--config FILE] [--set key=value ...] [--out DIR]

Commands: modes, spectrum, ab-phase, threshold, simulate, sweep.

Exit codes: 0 success, 2 configuration error, 3 numerical or domain error,
4 I/O error. ``GEMPL_CONSTANTS`` (``codata`` or ``paper``) selects the
physical constants.
"""

from __future__ import annotations

import argparse
import sys
import warnings

from gempl import __version__
from gempl.config import COMMANDS, parse_config
from gempl.errors import ConfigError, DomainError
from gempl.runner import run_command, write_outputs

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERIC", "EXIT_IO"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gempl", description="GEM fields, AB phases, cavity spectra and paramp thresholds.")
    p.add_argument("--version", action="version", version=f"gempl {__version__}")
    p.add_argument("command", nargs="?", choices=COMMANDS, help="what to compute")
    p.add_argument("--config", metavar="FILE", help="TOML configuration file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override a parameter (repeatable)")
    p.add_argument("--out", metavar="DIR", help="output directory (default: config 'output' or '.')")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        text = ""
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        config = parse_config(text, args.command, args.overrides)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            envelope = run_command(config)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        paths = write_outputs(envelope, args.out or config.output or ".")
    except ConfigError as exc:
        print(f"gempl: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, ArithmeticError) as exc:
        print(f"gempl: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"gempl: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
