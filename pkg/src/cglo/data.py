"""Design-point bookkeeping: locations, replication counts, streaming moments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def merge_moments(n_a: int, mean_a: float, m2_a: float, n_b: int, mean_b: float, m2_b: float):
    """Chan et al. parallel update of (count, mean, sum of squared deviations)."""
    if n_a == 0:
        return n_b, mean_b, m2_b
    if n_b == 0:
        return n_a, mean_a, m2_a
    n = n_a + n_b
    delta = mean_b - mean_a
    mean = mean_a + delta * n_b / n
    m2 = m2_a + m2_b + delta * delta * n_a * n_b / n
    return n, mean, m2


@dataclass
class DesignPoint:
    """One evaluated location: replication count and streaming moments.

    `m2` is the sum of squared deviations; the unbiased per-replication
    variance is m2/(reps-1) and is undefined below two replications.
    """

    x: np.ndarray
    reps: int
    sample_mean: float
    m2: float
    region_id: int = 0

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.m2 < 0:
            raise ValueError("m2 must be >= 0")

    @property
    def sample_var(self) -> float:
        """Variance of a single replication; nan until reps >= 2."""
        return self.m2 / (self.reps - 1) if self.reps >= 2 else math.nan


@dataclass
class Dataset:
    """All design points plus the prior noise value used below 2 replications."""

    bounds: np.ndarray  # (2, d)
    points: list[DesignPoint] = field(default_factory=list)
    prior_noise_var: float = 1.0

    def __post_init__(self):
        self.bounds = np.asarray(self.bounds, dtype=float)

    @property
    def dim(self) -> int:
        return self.bounds.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    def X(self) -> np.ndarray:
        return np.asarray([p.x for p in self.points])

    def means(self) -> np.ndarray:
        return np.asarray([p.sample_mean for p in self.points])

    def reps(self) -> np.ndarray:
        return np.asarray([p.reps for p in self.points], dtype=int)

    def sample_vars(self) -> np.ndarray:
        """Per-replication noise variances with the prior as reps<2 fallback."""
        out = np.asarray([p.sample_var for p in self.points])
        return np.where(np.isnan(out), self.prior_noise_var, out)

    def mean_noise(self) -> np.ndarray:
        """Noise variance of each sample mean: sample_var / reps."""
        return self.sample_vars() / self.reps()

    def region_indices(self, region_id: int) -> np.ndarray:
        return np.asarray(
            [i for i, p in enumerate(self.points) if p.region_id == region_id], dtype=int
        )

    def add(self, x, reps: int, sample_mean: float, m2: float, region_id: int) -> int:
        self.points.append(
            DesignPoint(x=x, reps=reps, sample_mean=sample_mean, m2=m2, region_id=region_id)
        )
        return len(self.points) - 1

    def merge(self, idx: int, reps: int, sample_mean: float, m2: float) -> None:
        p = self.points[idx]
        p.reps, p.sample_mean, p.m2 = merge_moments(
            p.reps, p.sample_mean, p.m2, reps, sample_mean, m2
        )

    def refresh_prior(self) -> None:
        vals = [p.sample_var for p in self.points if p.reps >= 2]
        if vals:
            self.prior_noise_var = float(np.median(vals))

    def without(self, idx: int) -> "Dataset":
        """Shallow leave-one-out view (shares DesignPoint objects)."""
        pts = [p for i, p in enumerate(self.points) if i != idx]
        return Dataset(bounds=self.bounds, points=pts, prior_noise_var=self.prior_noise_var)
