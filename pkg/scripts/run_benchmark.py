#!/usr/bin/env python3
"""Benchmark the four reductions on the bundled datasets.

Equivalent to `ect bench` with the default dataset list; kept as a script so
the experiment is one command from a fresh checkout:

    python scripts/run_benchmark.py --out-dir bench_out --seed 1
"""

import argparse
import sys

from ect import cli


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out-dir", default="bench_out")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--datasets", default="synth3,synth4,blobs5")
    p.add_argument("--splits", type=int, default=10)
    args = p.parse_args()
    return cli.main([
        "--seed", str(args.seed), "bench",
        "--datasets", args.datasets,
        "--splits", str(args.splits),
        "--out-dir", args.out_dir,
    ])


if __name__ == "__main__":
    sys.exit(main())
