"""Space-filling designs."""

from __future__ import annotations

import numpy as np


def latin_hypercube(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Latin hypercube sample on the unit box: one point per axis stratum.

    Returns an (n, d) array; column j is a random permutation of the n
    strata with a uniform jitter inside each stratum.
    """
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    u = rng.random((n, d))
    strata = np.empty((n, d))
    for j in range(d):
        strata[:, j] = rng.permutation(n)
    return (strata + u) / n


def scale_to_box(unit_points: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    """Map points from the unit box to the box given as a (2, d) array."""
    lo, hi = np.asarray(bounds, dtype=float)
    return lo + unit_points * (hi - lo)


def lhs_in_box(n: int, bounds: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    bounds = np.asarray(bounds, dtype=float)
    return scale_to_box(latin_hypercube(n, bounds.shape[1], rng), bounds)
