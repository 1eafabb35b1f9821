"""Command-line entry point.

Subcommands: `run <config>` (full experiment), `optimize <objective>
<optimizer>` (single run), `validate <config>`, `oracle <objective>`
(dense-grid true-optimum estimation).  Exit codes: 0 success, 2 config
error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from cglo import baselines, driver, harness
from cglo.baselines import GPEIConfig, RandomSearchConfig
from cglo.driver import CGLOConfig
from cglo.objectives import get_objective

# per-objective defaults used by the benchmark experiments
_CGLO_DEFAULTS = {
    "paper1d": dict(n0=12, K=3, init_reps=20, r_min=20, B2=20, total_budget=2600),
    "sun2d": dict(n0=40, K=5, init_reps=20, r_min=10, B2=10, total_budget=5000),
}


def _cmd_run(args) -> int:
    try:
        spec = harness.load_spec(args.config)
        problems = harness.validate_spec(
            spec, text=Path(args.config).read_text(), path=args.config
        )
        if problems:
            print("\n".join(problems), file=sys.stderr)
            return 2
        paths = harness.run_experiment(spec)
    except (harness.ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(f"results: {paths['results']}")
    print(f"summary: {paths['summary']}")
    print(Path(paths["summary"]).read_text(), end="")
    return 0


def _cmd_optimize(args) -> int:
    obj = get_objective(args.objective, seed=args.seed)
    if args.optimizer == "cglo":
        cfg = CGLOConfig(seed=args.seed, **_CGLO_DEFAULTS[args.objective])
        if args.budget:
            cfg.total_budget = args.budget
        best_x, best_mean, trace = driver.run(obj, cfg)
    elif args.optimizer == "rs":
        budget = args.budget or _CGLO_DEFAULTS[args.objective]["total_budget"]
        cfg = RandomSearchConfig(
            points=budget // 20, reps_per_point=20, total_budget=budget, seed=args.seed
        )
        best_x, best_mean, trace = baselines.random_search(obj, cfg)
    elif args.optimizer == "gp-ei-ocba":
        d = _CGLO_DEFAULTS[args.objective]
        cfg = GPEIConfig(
            n0=d["n0"],
            init_reps=d["init_reps"],
            r_min=d["r_min"],
            B2=d["B2"],
            total_budget=args.budget or d["total_budget"],
            seed=args.seed,
        )
        best_x, best_mean, trace = baselines.gp_ei_optimize(obj, cfg)
    else:
        print(f"unknown optimizer {args.optimizer!r}", file=sys.stderr)
        return 2
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / f"{args.optimizer}_{args.objective}_seed{args.seed}.csv"
        harness.emit_trace_csv(trace, obj.dim, path)
        print(f"trace: {path}")
    xs = " ".join(f"{v:.6f}" for v in np.atleast_1d(best_x))
    reported = -best_mean if obj.maximization else best_mean
    print(f"best_x: {xs}")
    print(f"best_sample_mean: {reported:.6f}")
    return 0


def _cmd_validate(args) -> int:
    try:
        problems = harness.validate(args.config)
    except harness.ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    if problems:
        print("\n".join(problems), file=sys.stderr)
        return 2
    spec = harness.load_spec(args.config)
    print("config ok; resolved settings:")
    harness._echo_spec(spec, Path("/dev/stdout"))
    return 0


def _cmd_oracle(args) -> int:
    obj = get_objective(args.objective)
    lo, hi = obj.bounds
    axes = [np.linspace(lo[j], hi[j], args.grid) for j in range(obj.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.asarray([obj.mean_fn(x) for x in pts])
    i = int(np.argmin(vals))
    xs = " ".join(f"{v:.6f}" for v in pts[i])
    val = float(vals[i])
    reported = -val if obj.maximization else val
    print(f"grid: {args.grid} per axis ({pts.shape[0]} points)")
    print(f"argmin_x: {xs}")
    print(f"optimum: {reported:.6f}")
    if obj.true_opt is not None:
        x_star, y_star = obj.true_opt
        print(f"recorded: x*={' '.join(f'{v:.6f}' for v in x_star)} value={y_star}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cglo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a full experiment from a config file")
    p.add_argument("config")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("optimize", help="single optimizer run")
    p.add_argument("objective", choices=sorted(_CGLO_DEFAULTS))
    p.add_argument("optimizer", choices=["cglo", "rs", "gp-ei-ocba"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=0)
    p.add_argument("--out", default="")
    p.set_defaults(fn=_cmd_optimize)

    p = sub.add_parser("validate", help="check a config file")
    p.add_argument("config")
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("oracle", help="dense-grid optimum estimation")
    p.add_argument("objective", choices=sorted(_CGLO_DEFAULTS))
    p.add_argument("--grid", type=int, default=1000)
    p.set_defaults(fn=_cmd_oracle)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (harness.ConfigError,) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
