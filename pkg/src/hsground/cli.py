"""Command-line entry point: ``hsground [COMMAND] CONFIG``."""

from __future__ import annotations

import argparse
import sys

from .harness import COMMANDS, run_config


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="hsground",
        description="Ground and bound states of a coupled Hardy-Sobolev system from a key = value config.")
    ap.add_argument("args", nargs="+", metavar="[COMMAND] CONFIG",
                    help=f"optional command ({', '.join(COMMANDS)}) overriding the config's, then the config path")
    ns = ap.parse_args(argv)
    if len(ns.args) == 1:
        command, path = None, ns.args[0]
    elif len(ns.args) == 2 and ns.args[0] in COMMANDS:
        command, path = ns.args
    else:
        ap.error(f"expected [COMMAND] CONFIG with COMMAND one of {', '.join(COMMANDS)}")
    return run_config(path, command)


if __name__ == "__main__":
    sys.exit(main())
