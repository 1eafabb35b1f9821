"""Builders shared across test modules."""

import numpy as np

from cglo.data import Dataset
from cglo.partition import assign_regions, build_partition


def make_dataset(n=14, d=1, seed=0, K=2, bounds=None):
    """Random dataset with smooth means, mild noise, and K-region labels."""
    rng = np.random.default_rng(seed)
    if bounds is None:
        bounds = np.vstack([np.zeros(d), np.ones(d)])
    lo, hi = np.asarray(bounds, dtype=float)
    X = lo + rng.random((n, d)) * (hi - lo)
    y = np.sin(3.0 * X).sum(axis=1) + 0.5 * X.sum(axis=1) ** 2
    part = build_partition(X, K, seed=seed, bounds=bounds)
    labels = assign_regions(part, X)
    data = Dataset(bounds=bounds)
    for x, yi, k in zip(X, y, labels):
        reps = int(rng.integers(5, 15))
        noise_var = 0.05 + 0.05 * rng.random()
        mean = yi + rng.normal(0.0, np.sqrt(noise_var / reps))
        data.add(x, reps, float(mean), noise_var * (reps - 1), int(k))
    data.refresh_prior()
    return data, part
