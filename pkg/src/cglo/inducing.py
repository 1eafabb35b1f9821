"""Inducing-point selection for the global model.

Per region, design points are stratified into response bands (sorted by
sample mean) and each band is clustered spatially; the cluster centroids are
the inducing points.  Selection is a pure, seeded function of the region's
data, so adding points to one region never moves another region's inducing
points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from cglo.data import Dataset
from cglo.partition import Partition, kmeans


@dataclass(frozen=True)
class InducingSet:
    points: np.ndarray  # (m, d), concatenated in region-id order
    per_region_counts: dict
    min_pairwise_distance: float

    @property
    def m(self) -> int:
        return self.points.shape[0]


def default_target(n_members: int, dim: int) -> int:
    """max(1, ceil(N_k/4)) capped at 2d+2 keeps m well below n."""
    return min(max(1, -(-n_members // 4)), 2 * dim + 2)


def proportional_counts(sizes, total: int) -> list[int]:
    """Largest-remainder split of `total` over groups, capped at group size.

    Assumes total <= sum(sizes); counts sum exactly to total.
    """
    sizes = [int(s) for s in sizes]
    n = sum(sizes)
    quotas = [total * s / n for s in sizes]
    counts = [min(int(q), s) for q, s in zip(quotas, sizes)]
    while sum(counts) < total:
        slack = [i for i in range(len(sizes)) if counts[i] < sizes[i]]
        i = max(slack, key=lambda i: (quotas[i] - counts[i], -i))
        counts[i] += 1
    return counts


def region_inducing(X_k: np.ndarray, y_k: np.ndarray, target: int, bands: int, seed: int):
    """Two-level (response band, then spatial k-means) centers for one region."""
    X_k = np.atleast_2d(np.asarray(X_k, dtype=float))
    y_k = np.asarray(y_k, dtype=float)
    n_k = X_k.shape[0]
    target = min(target, n_k)
    if n_k <= target:
        return X_k.copy()
    order = np.argsort(y_k, kind="stable")
    chunks = [c for c in np.array_split(order, bands) if c.size > 0]
    counts = proportional_counts([c.size for c in chunks], target)
    centers = []
    for band_idx, (chunk, k_b) in enumerate(zip(chunks, counts)):
        if k_b == 0:
            continue
        c, _ = kmeans(X_k[chunk], k_b, seed=seed + 7919 * band_idx)
        centers.append(c)
    return np.vstack(centers)


def _min_pairwise(points: np.ndarray, bounds: np.ndarray) -> float:
    if points.shape[0] >= 2:
        return float(pdist(points).min())
    lo, hi = bounds
    return float(np.linalg.norm(hi - lo)) / 10.0


def select_inducing(
    data: Dataset,
    p: Partition,
    target_per_region: int | None = None,
    bands: int = 2,
    seed: int = 0,
) -> InducingSet:
    """Response-stratified spatial clustering in every region."""
    X = data.X()
    y = data.means()
    blocks = []
    counts = {}
    for r in p.regions:
        idx = data.region_indices(r.id)
        if idx.size == 0:
            raise RuntimeError(f"region {r.id} has no design points")
        target = target_per_region or default_target(idx.size, data.dim)
        pts = region_inducing(X[idx], y[idx], target, bands, seed=seed + 104729 * r.id)
        blocks.append(pts)
        counts[r.id] = pts.shape[0]
    points = np.vstack(blocks)
    return InducingSet(
        points=points,
        per_region_counts=counts,
        min_pairwise_distance=_min_pairwise(points, data.bounds),
    )
