#!/usr/bin/env python3
"""Run every benchmark config in configs/ through the CLI.

Usage:
    python3 scripts/run_benchmarks.py [--only NAME ...]

Each config writes benchmark.csv / ratios.csv under its configured
out_dir (or $STIFFNET_OUTPUT_DIR if set).
"""

import argparse
import pathlib
import sys

from stiffnet.cli import main as cli_main

CONFIG_DIR = pathlib.Path(__file__).resolve().parent.parent / "configs"
BENCH_CONFIGS = ("fn_tolerance_sweep", "fn_size_sweep", "hr_coupling_sweep",
                 "hr_epsilon_sweep")


def run(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--only", nargs="*", default=None,
                        help="subset of config basenames to run")
    args = parser.parse_args(argv)
    names = args.only if args.only else BENCH_CONFIGS
    worst = 0
    for name in names:
        path = CONFIG_DIR / f"{name}.ini"
        print(f"=== bench {path.name} ===", flush=True)
        code = cli_main(["bench", "--config", str(path)])
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(run())
