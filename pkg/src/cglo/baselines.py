"""Comparison optimizers sharing the CGLO trace schema and budget accounting."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from cglo.acquisition import ei_closed
from cglo.allocation import apply_plan, ocba_allocate
from cglo.data import Dataset
from cglo.design import lhs_in_box
from cglo.driver import TraceRow
from cglo.gp import default_bounds, fit_hyperparams, full_gp_predict
from cglo.objectives import StochasticObjective, evaluate


@dataclass
class RandomSearchConfig:
    points: int = 100
    reps_per_point: int = 10
    total_budget: int = 0
    seed: int = 0


def random_search(objective: StochasticObjective, cfg: RandomSearchConfig):
    """Uniform random points, fixed replications each; returns
    (best_x, best_sample_mean, trace)."""
    if cfg.total_budget < cfg.points * cfg.reps_per_point:
        n_points = cfg.total_budget // cfg.reps_per_point
    else:
        n_points = cfg.points
    if n_points < 1:
        raise ValueError("budget too small for a single random-search point")
    rng = np.random.default_rng(cfg.seed)
    lo, hi = objective.bounds
    X = lo + rng.random((n_points, objective.dim)) * (hi - lo)
    trace = []
    best_x, best_mean = None, np.inf
    consumed = 0
    # row 0 covers the first point, standing in for an initialization row
    for i, x in enumerate(X):
        t0 = time.perf_counter()
        mean, _, _ = evaluate(objective, x, cfg.reps_per_point)
        consumed += cfg.reps_per_point
        if mean < best_mean:
            best_x, best_mean = x.copy(), mean
        trace.append(
            TraceRow(
                iteration=i,
                consumed_reps=consumed,
                region=0,
                n_new_points=1,
                b1=0,
                b2=0,
                best_x=best_x.copy(),
                best_mean=best_mean,
                wall_ms=(time.perf_counter() - t0) * 1000.0,
            )
        )
    return best_x, best_mean, trace


@dataclass
class GPEIConfig:
    n0: int = 10
    init_reps: int = 10
    r_min: int = 10
    B2: int = 10
    grid_size: int = 0  # 0: 100 * d
    refit_every: int = 5
    total_budget: int = 0
    seed: int = 0


def gp_ei_optimize(objective: StochasticObjective, cfg: GPEIConfig):
    """Dense-GP EI search with OCBA replication allocation over all points.

    A simplified search/allocate two-stage baseline: fit a full GP on all
    sample means, take the EI argmax on a fresh seeded LHS grid, evaluate it
    with r_min replications, then spread B2 replications over all points by
    OCBA.  Returns (best_x, best_sample_mean, trace).
    """
    if cfg.total_budget < cfg.n0 * cfg.init_reps:
        raise ValueError("budget below initialization cost")
    rng = np.random.default_rng(cfg.seed)
    d = objective.dim
    grid_size = cfg.grid_size or 100 * d
    data = Dataset(bounds=objective.bounds)
    consumed = 0
    for x in lhs_in_box(cfg.n0, objective.bounds, rng):
        mean, var, reps = evaluate(objective, x, cfg.init_reps)
        data.add(x, reps, mean, var * (reps - 1) if reps >= 2 else 0.0, 0)
        consumed += cfg.init_reps
    data.refresh_prior()

    t0 = time.perf_counter()
    hp = None
    since_refit = cfg.refit_every  # force a fit on the first iteration
    trace = []
    means = data.means()
    i0 = int(np.argmin(means))
    trace.append(
        TraceRow(
            iteration=0,
            consumed_reps=consumed,
            region=0,
            n_new_points=len(data),
            b1=0,
            b2=0,
            best_x=data.points[i0].x.copy(),
            best_mean=float(means[i0]),
            wall_ms=(time.perf_counter() - t0) * 1000.0,
        )
    )
    t = 0
    while consumed < cfg.total_budget:
        t += 1
        it0 = time.perf_counter()
        before = consumed
        X, Y, noise = data.X(), data.means(), data.mean_noise()
        if since_refit >= cfg.refit_every:
            bounds = default_bounds(X, Y, domain_bounds=objective.bounds)
            hp = fit_hyperparams(X, Y, noise, bounds, seed=cfg.seed)
            since_refit = 0
        n_new = 0
        if cfg.total_budget - consumed >= cfg.r_min:
            grid = lhs_in_box(grid_size, objective.bounds, rng)
            preds = [full_gp_predict(X, Y, noise, hp, g) for g in grid]
            best_pred = min(full_gp_predict(X, Y, noise, hp, xi).mean for xi in X)
            scores = [ei_closed(best_pred, p.mean, np.sqrt(p.variance)) for p in preds]
            x_new = grid[int(np.argmax(scores))]
            mean, var, reps = evaluate(objective, x_new, cfg.r_min)
            data.add(x_new, reps, mean, var * (reps - 1) if reps >= 2 else 0.0, 0)
            consumed += cfg.r_min
            since_refit += 1
            n_new = 1
        b2 = min(cfg.B2, cfg.total_budget - consumed)
        if b2 > 0:
            sds = np.sqrt(data.sample_vars())
            means = data.means()
            plan = ocba_allocate(
                [(means[i], sds[i], i) for i in range(len(data))], b2
            )
            _, spent = apply_plan(objective, data, plan)
            consumed += spent
        data.refresh_prior()
        means = data.means()
        ib = int(np.argmin(means))
        trace.append(
            TraceRow(
                iteration=t,
                consumed_reps=consumed,
                region=0,
                n_new_points=n_new,
                b1=0,
                b2=b2,
                best_x=data.points[ib].x.copy(),
                best_mean=float(means[ib]),
                wall_ms=(time.perf_counter() - it0) * 1000.0,
            )
        )
        if consumed == before:
            break
    means = data.means()
    ib = int(np.argmin(means))
    return data.points[ib].x.copy(), float(means[ib]), trace
