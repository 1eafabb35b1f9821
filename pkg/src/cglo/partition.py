"""Disjoint region partition of the design box.

Regions are built once from the initial design by k-means and kept fixed:
membership is nearest cluster center (Euclidean), which realizes the
bisecting hyperplane between every pair of centers and extends it
consistently to K > 2.  Ties go to the lowest region id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _nearest(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Index of the nearest center per point; ties break to the lowest index."""
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)
    return np.argmin(d2, axis=1)


def kmeans(points, K: int, seed: int):
    """Seeded Lloyd iteration with farthest-point initialization.

    Returns (centers (K,d), labels (n,)).  Empty clusters are repaired by
    stealing the farthest point from the largest cluster.  Deterministic
    given the seed; stops when assignments stop changing or at 100 sweeps.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if n < K:
        raise ValueError(f"need at least K={K} points, got {n}")
    rng = np.random.default_rng(seed)
    centers = [points[rng.integers(n)]]
    for _ in range(1, K):
        d2 = np.min(
            ((points[:, None, :] - np.asarray(centers)[None, :, :]) ** 2).sum(-1), axis=1
        )
        centers.append(points[int(np.argmax(d2))])
    centers = np.asarray(centers)

    labels = _nearest(points, centers)
    for _ in range(100):
        for k in range(K):
            members = points[labels == k]
            if members.shape[0] == 0:
                # repair: take the point farthest from the largest cluster's center
                sizes = np.bincount(labels, minlength=K)
                big = int(np.argmax(sizes))
                cand = np.where(labels == big)[0]
                far = cand[int(np.argmax(((points[cand] - centers[big]) ** 2).sum(-1)))]
                labels[far] = k
                members = points[labels == k]
            centers[k] = members.mean(axis=0)
        new_labels = _nearest(points, centers)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return centers, labels


@dataclass(frozen=True)
class Region:
    id: int  # 1-based
    center: np.ndarray
    member_ids: tuple[int, ...]


@dataclass(frozen=True)
class Partition:
    regions: tuple[Region, ...]
    domain_bounds: np.ndarray  # (2, d)

    @property
    def K(self) -> int:
        return len(self.regions)

    @property
    def centers(self) -> np.ndarray:
        return np.asarray([r.center for r in self.regions])

    def contains(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.domain_bounds
        return bool(np.all(x >= lo) and np.all(x <= hi))


def build_partition(points, K: int, seed: int, bounds) -> Partition:
    """Partition whose membership rule is nearest k-means center."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    bounds = np.asarray(bounds, dtype=float)
    centers, labels = kmeans(points, K, seed)
    regions = tuple(
        Region(
            id=k + 1,
            center=centers[k].copy(),
            member_ids=tuple(int(i) for i in np.where(labels == k)[0]),
        )
        for k in range(K)
    )
    return Partition(regions=regions, domain_bounds=bounds)


def assign_region(p: Partition, x) -> int:
    """Region id (1-based) claiming x; raises if x is outside the domain."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not p.contains(x):
        raise ValueError(f"point {x} outside domain bounds")
    return int(_nearest(x[None, :], p.centers)[0]) + 1


def assign_regions(p: Partition, X) -> np.ndarray:
    """Vectorized assign_region for an (n, d) batch (no bounds check)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return _nearest(X, p.centers) + 1


def region_bounding_boxes(p: Partition, n_samples: int = 2048, seed: int = 0) -> dict:
    """Approximate per-region bounding boxes from a fixed seeded sample.

    Voronoi cells are not boxes; each cell's box is estimated from uniform
    domain samples falling in it (plus its center), expanded by 5% of the
    domain span and clipped to the domain.  Deterministic.
    """
    lo, hi = p.domain_bounds
    rng = np.random.default_rng(seed)
    sample = lo + rng.random((n_samples, len(lo))) * (hi - lo)
    regs = assign_regions(p, sample)
    pad = 0.05 * (hi - lo)
    boxes = {}
    for r in p.regions:
        pts = sample[regs == r.id]
        pts = np.vstack([pts, r.center[None, :]]) if pts.size else r.center[None, :]
        blo = np.clip(pts.min(axis=0) - pad, lo, hi)
        bhi = np.clip(pts.max(axis=0) + pad, lo, hi)
        boxes[r.id] = np.vstack([blo, bhi])
    return boxes
