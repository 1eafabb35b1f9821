"""Experiment harness: config parsing, macroreplication driving, metric
computation against the known optima, and CSV reporting.

Config files are INI-style: an [experiment] section plus one section per
optimizer ([cglo], [rs], [gp-ei-ocba]).  All resolved settings are echoed
into the output directory for provenance.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cglo import baselines, driver
from cglo.baselines import GPEIConfig, RandomSearchConfig
from cglo.driver import CGLOConfig, TraceRow
from cglo.objectives import get_objective

WORKERS_ENV = "CGLO_WORKERS"
OPTIMIZERS = ("cglo", "rs", "gp-ei-ocba")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentSpec:
    objective: str
    optimizers: list
    macroreps: int
    checkpoints: list
    output_dir: str
    seed: int
    cglo: CGLOConfig = field(default_factory=CGLOConfig)
    rs: RandomSearchConfig = field(default_factory=RandomSearchConfig)
    gpei: GPEIConfig = field(default_factory=GPEIConfig)


def _line_of(text: str, token: str) -> int:
    for i, line in enumerate(text.splitlines(), start=1):
        if token in line:
            return i
    return 0


def _fill(cfg, section) -> None:
    for f in dataclasses.fields(cfg):
        if f.name not in section:
            continue
        raw = section[f.name].strip()
        if raw.lower() in ("none", ""):
            setattr(cfg, f.name, None)
            continue
        t = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", "str")
        if t.startswith("int"):
            setattr(cfg, f.name, int(raw))
        elif t.startswith("float"):
            setattr(cfg, f.name, float(raw))
        else:
            setattr(cfg, f.name, raw)


def load_spec(path) -> ExperimentSpec:
    path = Path(path)
    text = path.read_text()
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from exc
    if "experiment" not in parser:
        raise ConfigError(f"{path}:1: missing [experiment] section")
    exp = parser["experiment"]
    optimizers = [o.strip() for o in exp.get("optimizers", "cglo").split(",") if o.strip()]
    spec = ExperimentSpec(
        objective=exp.get("objective", "paper1d"),
        optimizers=optimizers,
        macroreps=exp.getint("macroreps", 1),
        checkpoints=[int(c) for c in exp.get("checkpoints", "").split(",") if c.strip()],
        output_dir=exp.get("output_dir", "results"),
        seed=exp.getint("seed", 0),
    )
    if "cglo" in parser:
        _fill(spec.cglo, parser["cglo"])
    if "rs" in parser:
        _fill(spec.rs, parser["rs"])
    if "gp-ei-ocba" in parser:
        _fill(spec.gpei, parser["gp-ei-ocba"])
    return spec


def validate_spec(spec: ExperimentSpec, text: str = "", path: str = "config") -> list:
    """All invariant violations, each with a best-effort line reference."""
    problems = []

    def add(token: str, msg: str) -> None:
        problems.append(f"{path}:{_line_of(text, token)}: {msg}")

    try:
        obj = get_objective(spec.objective)
    except ValueError as exc:
        add(spec.objective, str(exc))
        return problems
    if spec.macroreps < 1:
        add("macroreps", f"macroreps={spec.macroreps} must be >= 1")
    for opt in spec.optimizers:
        if opt not in OPTIMIZERS:
            add(opt, f"unknown optimizer {opt!r}; options: {OPTIMIZERS}")
    budgets = {
        "cglo": spec.cglo.total_budget,
        "rs": spec.rs.total_budget,
        "gp-ei-ocba": spec.gpei.total_budget,
    }
    for cp in spec.checkpoints:
        for opt in spec.optimizers:
            if opt in budgets and cp > budgets[opt]:
                add("checkpoints", f"checkpoint {cp} exceeds {opt} budget {budgets[opt]}")
    if "cglo" in spec.optimizers:
        for msg in spec.cglo.validate(obj.dim):
            add(msg.split("=")[0], msg)
    if "rs" in spec.optimizers:
        if spec.rs.total_budget < spec.rs.reps_per_point:
            add("rs", "rs budget below one point's replications")
    if "gp-ei-ocba" in spec.optimizers:
        if spec.gpei.total_budget < spec.gpei.n0 * spec.gpei.init_reps:
            add("gp-ei-ocba", "gp-ei-ocba budget below initialization cost")
    return problems


def validate(path) -> list:
    spec = load_spec(path)
    return validate_spec(spec, text=Path(path).read_text(), path=str(path))


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_trace_csv(trace: list, dim: int, path) -> None:
    """Write a trace with the fixed header
    iter,consumed_reps,region,n_new_points,B1,B2,best_x1..best_xd,best_mean,wall_ms."""
    xcols = ",".join(f"best_x{j + 1}" for j in range(dim))
    lines = [f"iter,consumed_reps,region,n_new_points,B1,B2,{xcols},best_mean,wall_ms"]
    for row in trace:
        xs = ",".join(repr(float(v)) for v in row.best_x)
        lines.append(
            f"{row.iteration},{row.consumed_reps},{row.region},{row.n_new_points},"
            f"{row.b1},{row.b2},{xs},{repr(float(row.best_mean))},{_fmt(row.wall_ms)}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace_csv(path) -> list:
    """Parse a trace CSV written by emit_trace_csv back into TraceRow values."""
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    dim = sum(1 for h in header if h.startswith("best_x"))
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        rows.append(
            TraceRow(
                iteration=int(parts[0]),
                consumed_reps=int(parts[1]),
                region=int(parts[2]),
                n_new_points=int(parts[3]),
                b1=int(parts[4]),
                b2=int(parts[5]),
                best_x=np.asarray([float(v) for v in parts[6 : 6 + dim]]),
                best_mean=float(parts[6 + dim]),
                wall_ms=float(parts[7 + dim]),
            )
        )
    return rows


def _run_one(args):
    """Worker entry: one optimizer run for one macroreplication."""
    optimizer, objective_name, cfg, seed = args
    obj = get_objective(objective_name, seed=seed)
    if optimizer == "cglo":
        cfg = dataclasses.replace(cfg, seed=seed)
        best_x, best_mean, trace = driver.run(obj, cfg)
    elif optimizer == "rs":
        cfg = dataclasses.replace(cfg, seed=seed)
        best_x, best_mean, trace = baselines.random_search(obj, cfg)
    elif optimizer == "gp-ei-ocba":
        cfg = dataclasses.replace(cfg, seed=seed)
        best_x, best_mean, trace = baselines.gp_ei_optimize(obj, cfg)
    else:
        raise ValueError(f"unknown optimizer {optimizer!r}")
    return optimizer, seed, best_x, best_mean, trace


def checkpoint_metrics(trace: list, checkpoint: int, true_opt, mean_fn=None) -> tuple:
    """(consumed, |dx|, |dy|, complete) at the last row within the checkpoint.

    With `mean_fn`, |dy| is the gap between the noise-free surface at the
    reported solution and the true optimum; otherwise the noisy sample mean
    stands in for the surface value."""
    x_star, y_star = true_opt
    eligible = [r for r in trace if r.consumed_reps <= checkpoint]
    row = eligible[-1] if eligible else trace[-1]
    complete = trace[-1].consumed_reps >= checkpoint
    dx = float(np.linalg.norm(row.best_x - x_star))
    y_hat = float(mean_fn(row.best_x)) if mean_fn is not None else row.best_mean
    dy = float(abs(y_hat - y_star))
    return row.consumed_reps, dx, dy, complete


def run_experiment(spec: ExperimentSpec) -> dict:
    """Run every optimizer for every macroreplication and write CSV outputs.

    Returns the paths of the written files.  Macroreplications fan out over
    CGLO_WORKERS processes; aggregation order is fixed, so outputs are
    byte-identical for a given spec and master seed (wall_ms aside).
    """
    obj = get_objective(spec.objective)
    if obj.true_opt is None:
        raise ConfigError(f"objective {spec.objective} has no recorded optimum")
    problems = validate_spec(spec)
    if problems:
        raise ConfigError("; ".join(problems))
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "traces").mkdir(exist_ok=True)
    _echo_spec(spec, out / "config_resolved.ini")

    cfg_by_opt = {"cglo": spec.cglo, "rs": spec.rs, "gp-ei-ocba": spec.gpei}
    jobs = [
        (opt, spec.objective, cfg_by_opt[opt], spec.seed + rep)
        for opt in spec.optimizers
        for rep in range(spec.macroreps)
    ]
    workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]

    rows = []
    per_cp = {}
    for (opt, _, _, seed), (optimizer, _, best_x, best_mean, trace) in zip(jobs, results):
        rep = seed - spec.seed
        emit_trace_csv(trace, obj.dim, out / "traces" / f"{optimizer}_rep{rep}.csv")
        for cp in spec.checkpoints or [trace[-1].consumed_reps]:
            consumed, dx, dy, complete = checkpoint_metrics(
                trace, cp, obj.true_opt, mean_fn=obj.mean_fn
            )
            rows.append((optimizer, rep, seed, cp, consumed, dx, dy, int(complete)))
            per_cp.setdefault((optimizer, cp), []).append((dx, dy))

    results_path = out / "results.csv"
    lines = ["optimizer,rep,seed,checkpoint,consumed,dx,dy,complete"]
    for r in rows:
        lines.append(
            f"{r[0]},{r[1]},{r[2]},{r[3]},{r[4]},{repr(r[5])},{repr(r[6])},{r[7]}"
        )
    results_path.write_text("\n".join(lines) + "\n")

    summary_path = out / "summary.csv"
    lines = ["optimizer,checkpoint,n,mean_dx,std_dx,mean_dy,std_dy"]
    for (optimizer, cp) in sorted(per_cp):
        vals = np.asarray(per_cp[(optimizer, cp)])
        n = vals.shape[0]
        std = vals.std(axis=0, ddof=1) if n > 1 else np.zeros(2)
        mean = vals.mean(axis=0)
        lines.append(
            f"{optimizer},{cp},{n},{repr(float(mean[0]))},{repr(float(std[0]))},"
            f"{repr(float(mean[1]))},{repr(float(std[1]))}"
        )
    summary_path.write_text("\n".join(lines) + "\n")
    return {"results": results_path, "summary": summary_path, "out_dir": out}


def _echo_spec(spec: ExperimentSpec, path: Path) -> None:
    parser = configparser.ConfigParser()
    parser["experiment"] = {
        "objective": spec.objective,
        "optimizers": ",".join(spec.optimizers),
        "macroreps": str(spec.macroreps),
        "checkpoints": ",".join(str(c) for c in spec.checkpoints),
        "output_dir": spec.output_dir,
        "seed": str(spec.seed),
    }
    for name, cfg in (("cglo", spec.cglo), ("rs", spec.rs), ("gp-ei-ocba", spec.gpei)):
        parser[name] = {
            f.name: str(getattr(cfg, f.name)) for f in dataclasses.fields(cfg)
        }
    with open(path, "w") as fh:
        parser.write(fh)
