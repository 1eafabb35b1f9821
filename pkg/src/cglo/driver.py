"""Iterated global-region selection, local search with a switching rule, and
replication allocation.

One iteration: pick the most promising region by the global criterion over a
fixed candidate set; add points inside that region at the local criterion's
argmax (each evaluated with r_min replications) until the region's global
score drops to the best score available elsewhere; then top replications up
to the minimum schedule everywhere and spend B2 more in the active region by
OCBA.  Regions are fixed after initialization; inducing points, residuals and
caches refresh with every new observation, hyperparameters every
`refit_every` new points.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from cglo.acquisition import (
    AcquisitionContext,
    gei,
    gei_batch,
    mei_batch,
    switch_threshold,
)
from cglo.allocation import BudgetState, apply_plan, min_rep_topup, ocba_allocate
from cglo.data import Dataset
from cglo.design import lhs_in_box
from cglo.inducing import InducingSet, region_inducing, default_target, _min_pairwise
from cglo.model import AGLGPModel, assemble, fit_two_stage, loo_cross_validate
from cglo.objectives import StochasticObjective, evaluate
from cglo.partition import (
    Partition,
    assign_region,
    assign_regions,
    build_partition,
    region_bounding_boxes,
)

DEDUP_TOL = 1e-9


@dataclass
class CGLOConfig:
    n0: int = 0  # 0: 12 per dimension... callers normally set this
    K: int = 0  # 0: floor(n0 / 4d) clamped to [2, 10]
    init_reps: int = 10
    r_min: int = 10
    B2: int = 0  # 0: same as r_min
    kappa_coef: float = 0.1
    v: float = 1.0
    mean_lo: float | None = None  # None: auto from initial sample means
    mean_hi: float | None = None
    candidate_count: int = 0  # 0: 20 * K
    local_grid_size: int = 0  # 0: 100 * d
    refit_every: int = 5
    max_local_points: int | None = None
    total_budget: int = 0
    seed: int = 0

    def resolved_k(self, dim: int) -> int:
        if self.K:
            return self.K
        return int(np.clip(self.n0 // (4 * dim), 2, 10))

    def resolved_b2(self) -> int:
        return self.B2 or self.r_min

    def validate(self, dim: int) -> list[str]:
        problems = []
        k = self.resolved_k(dim)
        if self.n0 < 2 * k:
            problems.append(f"n0={self.n0} must be >= 2K={2 * k}")
        if self.r_min < 1:
            problems.append(f"r_min={self.r_min} must be >= 1")
        if self.init_reps < 1:
            problems.append(f"init_reps={self.init_reps} must be >= 1")
        if self.total_budget < self.n0 * self.init_reps:
            problems.append(
                f"total_budget={self.total_budget} below initialization cost "
                f"n0*init_reps={self.n0 * self.init_reps}"
            )
        if self.kappa_coef <= 0:
            problems.append("kappa_coef must be positive")
        return problems


@dataclass
class TraceRow:
    iteration: int
    consumed_reps: int
    region: int
    n_new_points: int
    b1: int
    b2: int
    best_x: np.ndarray
    best_mean: float
    wall_ms: float


@dataclass
class GlobalStepResult:
    x_g0: np.ndarray
    region_id: int
    gei_value: float
    candidate_index: int


@dataclass
class CGLOState:
    objective: StochasticObjective
    cfg: CGLOConfig
    data: Dataset
    partition: Partition
    inducing: InducingSet
    model: AGLGPModel
    budget: BudgetState
    ctx: AcquisitionContext
    region_boxes: dict
    rng: np.random.Generator
    new_since_refit: int = 0
    cv_passed: bool = True
    min_rep_violated: bool = False

    def incumbent(self):
        means = self.data.means()
        i = int(np.argmin(means))
        return self.data.points[i].x.copy(), float(means[i])


def _auto_clamps(means: np.ndarray):
    lo, hi = float(np.min(means)), float(np.max(means))
    spread = hi - lo
    if spread <= 0:
        spread = max(1.0, abs(hi))
    return lo - 5.0 * spread, hi + 5.0 * spread


def build_candidates(
    partition: Partition, region_boxes: dict, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Fixed global candidate set: LHS over the domain, topped up by
    region-local rejection sampling so every region keeps enough candidates."""
    K = partition.K
    need = max(3, count // (2 * K))
    cands = lhs_in_box(count, partition.domain_bounds, rng)
    regs = assign_regions(partition, cands)
    extra = []
    for r in partition.regions:
        short = need - int(np.sum(regs == r.id))
        tries = 0
        while short > 0 and tries < 200:
            lo, hi = region_boxes[r.id]
            draw = lo + rng.random((max(short * 4, 16), len(lo))) * (hi - lo)
            keep = draw[assign_regions(partition, draw) == r.id][:short]
            if keep.shape[0]:
                extra.append(keep)
                short -= keep.shape[0]
            tries += 1
    if extra:
        cands = np.vstack([cands] + extra)
    return cands


def region_lhs(
    partition: Partition,
    region_boxes: dict,
    region_id: int,
    size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Fresh LHS discretization of one region (rejection against its box)."""
    kept = []
    have = 0
    for _ in range(50):
        draw = lhs_in_box(size, region_boxes[region_id], rng)
        ok = draw[assign_regions(partition, draw) == region_id]
        if ok.shape[0]:
            kept.append(ok)
            have += ok.shape[0]
        if have >= size:
            break
    if not kept:
        return np.empty((0, partition.domain_bounds.shape[1]))
    return np.vstack(kept)[:size]


def _refresh_inducing(state: CGLOState, region_id: int) -> None:
    """Re-select one region's inducing points; other regions stay put."""
    cfg = state.cfg
    data = state.data
    idx = data.region_indices(region_id)
    target = default_target(idx.size, data.dim)
    pts = region_inducing(
        data.X()[idx],
        data.means()[idx],
        target,
        bands=2,
        seed=cfg.seed + 104729 * region_id,
    )
    blocks = []
    counts = {}
    for r in state.partition.regions:
        block = (
            pts
            if r.id == region_id
            else state.inducing.points[_region_slice(state.inducing, r.id)]
        )
        blocks.append(block)
        counts[r.id] = block.shape[0]
    points = np.vstack(blocks)
    state.inducing = InducingSet(
        points=points,
        per_region_counts=counts,
        min_pairwise_distance=_min_pairwise(points, data.bounds),
    )
    # ctx.kappa_radius deliberately stays at its initial value: new design
    # points concentrate inside exploited regions, so the minimum inducing
    # spacing shrinks over time and would otherwise stop the density penalty
    # from ever flagging crowded candidates.


def _region_slice(ind: InducingSet, region_id: int) -> slice:
    start = 0
    for rid in sorted(ind.per_region_counts):
        cnt = ind.per_region_counts[rid]
        if rid == region_id:
            return slice(start, start + cnt)
        start += cnt
    raise KeyError(region_id)


def _refresh_model(state: CGLOState, force_refit: bool = False) -> None:
    cfg = state.cfg
    if force_refit or state.new_since_refit >= cfg.refit_every:
        state.model = fit_two_stage(
            state.data,
            state.partition,
            state.inducing,
            seed=cfg.seed,
            warm=state.model,
            n_starts=3,
        )
        state.new_since_refit = 0
    else:
        state.model = assemble(
            state.data,
            state.partition,
            state.inducing,
            state.model.hp_global,
            state.model.local_hps(),
        )


def initialize(objective: StochasticObjective, cfg: CGLOConfig) -> CGLOState:
    """Space-filling initial design, partition, inducing set, two-stage fit,
    and a cross-validation gate that doubles init_reps (up to 3 times) on
    failure."""
    problems = cfg.validate(objective.dim)
    if problems:
        raise ValueError("invalid config: " + "; ".join(problems))
    rng = np.random.default_rng(cfg.seed)
    d = objective.dim
    X0 = lhs_in_box(cfg.n0, objective.bounds, rng)
    K = cfg.resolved_k(d)
    partition = build_partition(X0, K, seed=cfg.seed, bounds=objective.bounds)
    labels = assign_regions(partition, X0)

    data = Dataset(bounds=objective.bounds)
    budget = BudgetState(
        total_budget=cfg.total_budget,
        r_min=cfg.r_min,
        B2=cfg.resolved_b2(),
        kappa_coef=cfg.kappa_coef,
    )
    for x, k in zip(X0, labels):
        mean, var, reps = evaluate(objective, x, cfg.init_reps)
        data.add(x, reps, mean, var * (reps - 1) if reps >= 2 else 0.0, int(k))
        budget.charge(cfg.init_reps)
    data.refresh_prior()

    inducing = select_inducing_all(data, partition, cfg.seed)
    model = fit_two_stage(data, partition, inducing, seed=cfg.seed)
    report = loo_cross_validate(model, data)
    reps_now = cfg.init_reps
    attempts = 0
    while not report.passed and attempts < 3:
        target = reps_now * 2
        extra = target - reps_now
        if budget.remaining < extra * len(data):
            break
        for i, p in enumerate(data.points):
            mean, var, reps = evaluate(objective, p.x, extra, start=p.reps)
            data.merge(i, reps, mean, var * (reps - 1) if reps >= 2 else 0.0)
            budget.charge(extra)
        data.refresh_prior()
        reps_now = target
        model = fit_two_stage(data, partition, inducing, seed=cfg.seed)
        report = loo_cross_validate(model, data)
        attempts += 1
    if not report.passed:
        warnings.warn(
            "initial model failed cross-validation "
            f"(max standardized residual {report.max_abs_std_residual:.2f}); proceeding",
            stacklevel=2,
        )
    budget.sync_ledger(data)

    lo, hi = _auto_clamps(data.means())
    if cfg.mean_lo is not None:
        lo = cfg.mean_lo
    if cfg.mean_hi is not None:
        hi = cfg.mean_hi
    region_boxes = region_bounding_boxes(partition, seed=cfg.seed)
    cand_rng = np.random.default_rng((cfg.seed, 1))
    candidates = build_candidates(
        partition, region_boxes, cfg.candidate_count or 20 * K, cand_rng
    )
    ctx = AcquisitionContext(
        v=cfg.v,
        kappa_radius=inducing.min_pairwise_distance,
        mean_lo=lo,
        mean_hi=hi,
        candidates=candidates,
    )
    return CGLOState(
        objective=objective,
        cfg=cfg,
        data=data,
        partition=partition,
        inducing=inducing,
        model=model,
        budget=budget,
        ctx=ctx,
        region_boxes=region_boxes,
        rng=np.random.default_rng((cfg.seed, 2)),
        cv_passed=report.passed,
    )


def select_inducing_all(data: Dataset, partition: Partition, seed: int) -> InducingSet:
    from cglo.inducing import select_inducing

    return select_inducing(data, partition, seed=seed)


def global_step(state: CGLOState) -> GlobalStepResult:
    """Argmax of the global criterion over the candidate set (ties: lowest index)."""
    scores = gei_batch(state.model, state.ctx, state.data, state.ctx.candidates)
    i = int(np.argmax(scores))
    x_g0 = state.ctx.candidates[i].copy()
    return GlobalStepResult(
        x_g0=x_g0,
        region_id=assign_region(state.partition, x_g0),
        gei_value=float(scores[i]),
        candidate_index=i,
    )


def local_step(state: CGLOState, gres: GlobalStepResult) -> int:
    """Sequential local search in the promising region; returns the number of
    new design points."""
    cfg = state.cfg
    k = gres.region_id
    grid_size = cfg.local_grid_size or 100 * state.data.dim
    n_new = 0
    while True:
        if state.budget.remaining < cfg.r_min:
            break
        grid = region_lhs(state.partition, state.region_boxes, k, grid_size, state.rng)
        if grid.shape[0] == 0:
            break
        scores = mei_batch(state.model, state.ctx, k, grid)
        X_existing = state.data.X()
        x_new = None
        for j in np.lexsort((np.arange(len(scores)), -scores)):
            cand = grid[j]
            if np.min(np.linalg.norm(X_existing - cand, axis=1)) > DEDUP_TOL:
                x_new = cand
                break
        if x_new is None:
            break
        mean, var, reps = evaluate(state.objective, x_new, cfg.r_min)
        state.data.add(x_new, reps, mean, var * (reps - 1) if reps >= 2 else 0.0, k)
        state.budget.charge(cfg.r_min)
        state.data.refresh_prior()
        n_new += 1
        state.new_since_refit += 1
        _refresh_inducing(state, k)
        _refresh_model(state)

        if cfg.max_local_points is not None and n_new >= cfg.max_local_points:
            break
        gei0 = gei(state.model, state.ctx, state.data, gres.x_g0)
        gstar = switch_threshold(state.model, state.ctx, state.data, k)
        if gei0 <= gstar:
            break
    state.budget.sync_ledger(state.data)
    return n_new


def allocation_step(state: CGLOState, region_id: int):
    """Minimum-replication top-up everywhere, then OCBA inside the region.

    Returns (b1, b2) actually spent.
    """
    data, budget = state.data, state.budget
    plan1 = min_rep_topup(data, budget)
    _, b1 = apply_plan(state.objective, data, plan1)
    budget.charge(b1)

    b2 = 0
    idx = data.region_indices(region_id)
    if budget.remaining > 0 and idx.size > 0:
        b2 = min(budget.B2, budget.remaining)
        sds = np.sqrt(data.sample_vars())
        means = data.means()
        plan2 = ocba_allocate([(means[i], sds[i], int(i)) for i in idx], b2)
        _, spent = apply_plan(state.objective, data, plan2)
        budget.charge(spent)
        b2 = spent
    data.refresh_prior()
    budget.sync_ledger(data)

    required = budget.kappa_required(len(data))
    if min(p.reps for p in data.points) < required:
        if budget.remaining > 0:
            raise AssertionError(
                "minimum-replication rule violated with budget remaining"
            )
        state.min_rep_violated = True  # budget ran out mid-step; run terminates
    _refresh_model(state)
    return b1, b2


def run(objective: StochasticObjective, cfg: CGLOConfig) -> tuple:
    """Full optimization loop; returns (best_x, best_sample_mean, trace)."""
    t0 = time.perf_counter()
    state = initialize(objective, cfg)
    trace = []
    bx, bm = state.incumbent()
    trace.append(
        TraceRow(
            iteration=0,
            consumed_reps=state.budget.consumed,
            region=0,
            n_new_points=len(state.data),
            b1=0,
            b2=0,
            best_x=bx,
            best_mean=bm,
            wall_ms=(time.perf_counter() - t0) * 1000.0,
        )
    )
    t = 0
    while state.budget.remaining > 0 and not state.min_rep_violated:
        t += 1
        it0 = time.perf_counter()
        before = state.budget.consumed
        gres = global_step(state)
        n_new = local_step(state, gres)
        b1, b2 = allocation_step(state, gres.region_id)
        bx, bm = state.incumbent()
        trace.append(
            TraceRow(
                iteration=t,
                consumed_reps=state.budget.consumed,
                region=gres.region_id,
                n_new_points=n_new,
                b1=b1,
                b2=b2,
                best_x=bx,
                best_mean=bm,
                wall_ms=(time.perf_counter() - it0) * 1000.0,
            )
        )
        if state.budget.consumed == before:
            break  # no budget could be spent; avoid spinning
    bx, bm = state.incumbent()
    return bx, bm, trace
