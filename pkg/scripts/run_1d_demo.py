#!/usr/bin/env python3
"""Quick 1D demo: one CGLO run on the paper1d problem with a printed trace.

Usage: python scripts/run_1d_demo.py [--seed S] [--budget T]
"""

import argparse

import numpy as np

from cglo.driver import CGLOConfig, run
from cglo.objectives import get_objective


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--budget", type=int, default=2600)
    args = ap.parse_args()

    obj = get_objective("paper1d", seed=args.seed)
    cfg = CGLOConfig(
        n0=12,
        K=3,
        init_reps=20,
        r_min=20,
        B2=20,
        total_budget=args.budget,
        seed=args.seed,
    )
    best_x, best_mean, trace = run(obj, cfg)

    print(f"{'iter':>4} {'reps':>6} {'region':>6} {'new':>4} {'B1':>4} {'B2':>4} "
          f"{'best_x':>10} {'best_mean':>10}")
    for r in trace:
        print(f"{r.iteration:>4} {r.consumed_reps:>6} {r.region:>6} "
              f"{r.n_new_points:>4} {r.b1:>4} {r.b2:>4} "
              f"{r.best_x[0]:>10.4f} {r.best_mean:>10.4f}")

    x_star, y_star = obj.true_opt
    print(f"\nbest_x: {best_x[0]:.4f} (true optimum {x_star[0]:.4f})")
    print(f"best_sample_mean: {best_mean:.4f} (true optimum value {y_star:.4f})")
    print(f"surface value at best_x: {float(obj.mean_fn(best_x)):.4f}")
    print(f"|dx| = {float(np.linalg.norm(best_x - x_star)):.4f}, "
          f"|dy| = {abs(float(obj.mean_fn(best_x)) - y_star):.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
