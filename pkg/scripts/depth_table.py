#!/usr/bin/env python3
"""Measured tournament depths against every closed-form bound.

Prints one row per (k, m) grid point: realized first-phase rounds under both
semantics, the end-to-end importance depth, the minimum closed-form bound,
and the pool tracker rounds next to the chernoff-style estimate.
"""

import argparse

from ect.analysis import chernoff_depth, depth_bounds, level_tracker
from ect.tournaments import build_final_tree, build_schedule


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--k", type=int, nargs="*", default=[4, 8, 16, 64, 256, 1024])
    p.add_argument("--m", type=int, nargs="*", default=[1, 2, 3, 5, 10])
    args = p.parse_args()

    header = (
        f"{'k':>5} {'m':>3} {'complete':>9} {'pool':>6} {'importance':>11} "
        f"{'bound':>8} {'tracker':>8} {'chernoff':>9}"
    )
    print(header)
    print("-" * len(header))
    for k in args.k:
        for m in args.m:
            complete = build_schedule(k, m, "complete")
            pool = build_schedule(k, m, "pool")
            final = build_final_tree(m).max_path_importance()
            bounds = depth_bounds(k, m)
            tracker = level_tracker(k, m)
            print(
                f"{k:>5} {m:>3} {complete.n_rounds:>9} {pool.n_rounds:>6} "
                f"{complete.n_rounds + final:>11} {bounds.min_importance_bound():>8.2f} "
                f"{tracker.rounds:>8} {chernoff_depth(k, m):>9.2f}"
            )


if __name__ == "__main__":
    main()
