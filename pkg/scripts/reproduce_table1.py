#!/usr/bin/env python3
"""Recompute the built-in reference table by every route and compare.

Runs the `table1` command once per requested method and exits nonzero if
any row of any method misses its 4-significant-digit target.
"""

import argparse
import sys

from brfactor.cli import main as cli_main

METHODS = ("closed", "series", "series-general", "numeric")


def run(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument(
        "--method",
        action="append",
        choices=METHODS,
        help="repeatable; default runs all four routes",
    )
    ap.add_argument("--csv-prefix", default=None,
                    help="write per-method CSVs to PREFIX-<method>.csv")
    args = ap.parse_args(argv)

    worst = 0
    for method in args.method or METHODS:
        print(f"== method: {method} ==")
        cmd = ["table1", "--method", method]
        if args.csv_prefix:
            cmd += ["--csv", f"{args.csv_prefix}-{method}.csv"]
        code = cli_main(cmd)
        worst = max(worst, code)
        print()
    return worst


if __name__ == "__main__":
    sys.exit(run())
