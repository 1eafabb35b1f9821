"""Replication allocation: minimum-replication top-up and OCBA.

Every design point must carry at least ceil(kappa_coef * N_t) replications
(the schedule kappa_k = c*k is nondecreasing, diverges, and keeps
sum_k k*exp(-a*kappa_k) finite for every a > 0).  On top of that, a fixed
per-iteration budget B2 is spread over the promising region's points by the
OCBA rule to sharpen the selection of the best sampled point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cglo.data import Dataset

SD_FLOOR = 1e-6
DELTA_FLOOR = 1e-6


@dataclass
class BudgetState:
    total_budget: int
    r_min: int
    B2: int
    kappa_coef: float = 0.1
    consumed: int = 0
    ledger: dict = field(default_factory=dict)  # design-point index -> reps

    def __post_init__(self):
        if self.total_budget < 1 or self.r_min < 1 or self.B2 < 1:
            raise ValueError("total_budget, r_min and B2 must be positive")
        if self.kappa_coef <= 0:
            raise ValueError("kappa_coef must be positive")

    @property
    def remaining(self) -> int:
        return self.total_budget - self.consumed

    def kappa_required(self, n_points: int) -> int:
        return math.ceil(self.kappa_coef * n_points)

    def charge(self, reps: int) -> None:
        self.consumed += reps

    def sync_ledger(self, data: Dataset) -> None:
        self.ledger = {i: p.reps for i, p in enumerate(data.points)}


def _largest_remainder(quotas: np.ndarray, total: int) -> np.ndarray:
    counts = np.floor(quotas).astype(int)
    rem = total - int(counts.sum())
    if rem > 0:
        frac = quotas - counts
        order = np.lexsort((np.arange(len(quotas)), -frac))
        counts[order[:rem]] += 1
    return counts


def min_rep_topup(data: Dataset, bs: BudgetState) -> dict:
    """Extra replications bringing every point up to ceil(kappa(N_t)).

    Scaled down by largest remainder if the full plan would exceed the
    remaining budget (the run then terminates after applying what fits).
    """
    n_t = len(data)
    need = bs.kappa_required(n_t)
    extras = {i: max(0, need - p.reps) for i, p in enumerate(data.points)}
    extras = {i: e for i, e in extras.items() if e > 0}
    total = sum(extras.values())
    if total > bs.remaining:
        ids = sorted(extras)
        raw = np.asarray([extras[i] for i in ids], dtype=float)
        scaled = _largest_remainder(raw * bs.remaining / total, bs.remaining)
        extras = {i: int(c) for i, c in zip(ids, scaled) if c > 0}
    return extras


def ocba_allocate(points, B2: int) -> dict:
    """OCBA split of B2 replications over (sample_mean, sample_sd, id) triples.

    The point with the lowest mean is the reference b; competitor ratios are
    (sd_i / gap_i)^2 and b gets sd_b * sqrt(sum (N_i/sd_i)^2).  The continuous
    solution is scaled and largest-remainder rounded to sum exactly to B2.
    """
    if B2 <= 0:
        raise ValueError(f"B2 must be positive, got {B2}")
    points = list(points)
    if not points:
        raise ValueError("need at least one point")
    means = np.asarray([p[0] for p in points], dtype=float)
    sds = np.maximum(np.asarray([p[1] for p in points], dtype=float), SD_FLOOR)
    ids = [p[2] for p in points]
    if len(points) == 1:
        return {ids[0]: B2}
    b = int(np.lexsort((ids, means))[0])
    gaps = np.maximum(means - means[b], DELTA_FLOOR)
    w = (sds / gaps) ** 2
    others = np.ones(len(points), dtype=bool)
    others[b] = False
    w[b] = sds[b] * np.sqrt(np.sum((w[others] / sds[others]) ** 2))
    quotas = w * B2 / w.sum()
    counts = _largest_remainder(quotas, B2)
    return {ids[i]: int(c) for i, c in enumerate(counts)}


def apply_plan(objective, data: Dataset, plan: dict):
    """Run the stochastic objective per the plan and stream-merge the moments.

    Returns (data, consumed); per-point substreams continue where the point's
    existing replications left off.
    """
    from cglo.objectives import evaluate

    consumed = 0
    for idx, extra in sorted(plan.items()):
        if extra <= 0:
            continue
        p = data.points[idx]
        mean, var, reps = evaluate(objective, p.x, extra, start=p.reps)
        data.merge(idx, reps, mean, var * (reps - 1) if reps >= 2 else 0.0)
        consumed += extra
    return data, consumed
