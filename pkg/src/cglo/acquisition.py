"""Expected-improvement search criteria.

Closed-form EI, the global criterion (EI under the global model times a
logistic penalty decreasing in the local density of design points), the
local criterion (EI under the overall model with the noise-free spatial
variance, exactly zero at sampled points), and the switching threshold.
Predictive means are clamped to [mean_lo, mean_hi] to guard against wild
extrapolation from few points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from cglo.data import Dataset
from cglo.model import (
    AGLGPModel,
    local_spatial_var_batch,
    predict_global_batch,
    predict_local_batch,
)
from cglo.partition import assign_region, assign_regions


@dataclass
class AcquisitionContext:
    v: float  # penalty steepness
    kappa_radius: float  # neighborhood radius = min inducing spacing
    mean_lo: float
    mean_hi: float
    candidates: np.ndarray  # (c, d) global candidate set, covers every region

    def __post_init__(self):
        if not self.mean_lo < self.mean_hi:
            raise ValueError("mean_lo must be < mean_hi")
        if self.v <= 0 or self.kappa_radius <= 0:
            raise ValueError("v and kappa_radius must be positive")
        self.candidates = np.atleast_2d(np.asarray(self.candidates, dtype=float))

    def clamp(self, mean: float) -> float:
        return float(np.clip(mean, self.mean_lo, self.mean_hi))


def ei_closed(best: float, mean: float, sd: float) -> float:
    """E[max(best - N(mean, sd^2), 0)] in closed form."""
    if sd < 0:
        raise ValueError("sd must be >= 0")
    if sd == 0.0:
        return max(best - mean, 0.0)
    z = (best - mean) / sd
    return float((best - mean) * norm.cdf(z) + sd * norm.pdf(z))


def count_neighbors(data: Dataset, model: AGLGPModel, x, radius: float) -> int:
    """Design points of x's own region strictly within `radius` of x."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = assign_region(model.partition, x)
    idx = data.region_indices(k)
    if idx.size == 0:
        return 0
    dists = np.linalg.norm(data.X()[idx] - x, axis=1)
    return int(np.sum(dists < radius))


def _count_neighbors_batch(
    data: Dataset, model: AGLGPModel, X_eval: np.ndarray, radius: float
) -> np.ndarray:
    """count_neighbors for every row of X_eval at once."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    regs = assign_regions(model.partition, X_eval)
    X = data.X()
    point_regs = np.asarray([p.region_id for p in data.points])
    dists = np.linalg.norm(X_eval[:, None, :] - X[None, :, :], axis=2)
    same = point_regs[None, :] == regs[:, None]
    return np.sum((dists < radius) & same, axis=1)


def density_penalty(n_a: int, v: float) -> float:
    """Logistic factor in (0, 1]; equals 0.5 at n_a = 5v."""
    return 1.0 / (1.0 + np.exp(n_a / v - 5.0))


def global_best_prediction(m: AGLGPModel, ctx: AcquisitionContext) -> float:
    """Lowest clamped global prediction over the inducing points."""
    means, _ = predict_global_batch(m, m.global_.inducing.points)
    return float(np.min(np.clip(means, ctx.mean_lo, ctx.mean_hi)))


def gei_batch(
    m: AGLGPModel, ctx: AcquisitionContext, data: Dataset, X_eval
) -> np.ndarray:
    """Global criterion scores for every row of X_eval."""
    X_eval = np.atleast_2d(np.asarray(X_eval, dtype=float))
    means, vars_ = predict_global_batch(m, X_eval)
    means = np.clip(means, ctx.mean_lo, ctx.mean_hi)
    sds = np.sqrt(vars_)
    best = global_best_prediction(m, ctx)
    n_a = _count_neighbors_batch(data, m, X_eval, ctx.kappa_radius)
    ei = np.asarray([ei_closed(best, mu, sd) for mu, sd in zip(means, sds)])
    return ei * density_penalty(n_a, ctx.v)


def gei(m: AGLGPModel, ctx: AcquisitionContext, data: Dataset, x) -> float:
    """Global criterion: clamped-mean EI times the density penalty."""
    return float(gei_batch(m, ctx, data, x)[0])


def region_best_prediction(m: AGLGPModel, ctx: AcquisitionContext, region_id: int) -> float:
    """Lowest clamped overall prediction over the region's sampled points."""
    lm = m.locals_[region_id]
    if lm.empty:
        raise RuntimeError(f"region {region_id} has no sampled points")
    gm, _ = predict_global_batch(m, lm.X)
    loc, _ = predict_local_batch(m, lm.X, region_id)
    return float(np.min(np.clip(gm + loc, ctx.mean_lo, ctx.mean_hi)))


def mei_batch(
    m: AGLGPModel, ctx: AcquisitionContext, region_id: int, X_eval
) -> np.ndarray:
    """Local criterion scores for rows of X_eval, all inside one region."""
    X_eval = np.atleast_2d(np.asarray(X_eval, dtype=float))
    gm, _ = predict_global_batch(m, X_eval)
    loc, _ = predict_local_batch(m, X_eval, region_id)
    means = np.clip(gm + loc, ctx.mean_lo, ctx.mean_hi)
    sds = np.sqrt(local_spatial_var_batch(m, X_eval, region_id))
    best = region_best_prediction(m, ctx, region_id)
    ei = np.asarray([ei_closed(best, mu, sd) for mu, sd in zip(means, sds)])
    # zero spatial sd only happens at sampled points, where no improvement is
    # possible; force exact zeros there instead of solver-rounding residue
    return np.where(sds == 0.0, 0.0, ei)


def mei(m: AGLGPModel, ctx: AcquisitionContext, region_id: int, x) -> float:
    """Local criterion: EI under the overall model with spatial-only variance."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if assign_region(m.partition, x) != region_id:
        raise ValueError(f"point {x} is not in region {region_id}")
    return float(mei_batch(m, ctx, region_id, x)[0])


def switch_threshold(
    m: AGLGPModel, ctx: AcquisitionContext, data: Dataset, region_id: int
) -> float:
    """Best gEI among candidates outside the active region."""
    regs = assign_regions(m.partition, ctx.candidates)
    outside = ctx.candidates[regs != region_id]
    if outside.shape[0] == 0:
        raise RuntimeError(
            f"no global candidates outside region {region_id}; candidate set must cover every region"
        )
    return float(np.max(gei_batch(m, ctx, data, outside)))
