"""Stochastic test problems and the noisy-objective wrapper.

Each objective owns a master seed; replication draws come from per-point
substreams keyed by (seed, point), indexed by replication number, so batched
and single-pass evaluation agree and parallel evaluation stays reproducible.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class StochasticObjective:
    name: str
    dim: int
    bounds: np.ndarray  # (2, d)
    mean_fn: Callable  # minimized
    noise_sd_fn: Callable
    true_opt: tuple | None = None  # (x*, f(x*)) in minimization convention
    seed: int = 0
    maximization: bool = False  # original problem sign, for reporting

    def __post_init__(self):
        object.__setattr__(self, "bounds", np.asarray(self.bounds, dtype=float))

    def with_seed(self, seed: int) -> "StochasticObjective":
        return replace(self, seed=seed)

    def contains(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.bounds
        return bool(np.all(x >= lo) and np.all(x <= hi))


def _point_stream(obj: StochasticObjective, x: np.ndarray) -> np.random.Generator:
    key = hashlib.blake2b(np.asarray(x, dtype=float).tobytes(), digest_size=8).digest()
    return np.random.default_rng(
        np.random.SeedSequence(entropy=obj.seed, spawn_key=(int.from_bytes(key, "big"),))
    )


def evaluate(obj: StochasticObjective, x, reps: int, start: int = 0):
    """Draw `reps` noisy replications at x, skipping the first `start` draws
    of the point's stream.  Returns (sample_mean, sample_var, reps)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not obj.contains(x):
        raise ValueError(f"point {x} outside objective bounds")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    rng = _point_stream(obj, x)
    z = rng.standard_normal(start + reps)[start:]
    y = float(obj.mean_fn(x)) + float(obj.noise_sd_fn(x)) * z
    mean = float(np.mean(y))
    var = float(np.var(y, ddof=1)) if reps >= 2 else 0.0
    return mean, var, reps


def make_1d_paper(seed: int = 0) -> StochasticObjective:
    """Multi-modal 1D test problem on [0, 1] with x-dependent noise.

    Global minimum -10.1316 at x = 0.9865; runner-up -9.5799 at x = 0.4826.
    """

    def mean_fn(x):
        x = float(np.atleast_1d(x)[0])
        return np.cos(100.0 * (x - 0.2)) * np.exp(2.0 * x) + 7.0 * np.sin(10.0 * x)

    def noise_sd_fn(x):
        x = float(np.atleast_1d(x)[0])
        return np.sqrt(0.2 + 0.1 * np.sin(10.0 * x))

    return StochasticObjective(
        name="paper1d",
        dim=1,
        bounds=np.array([[0.0], [1.0]]),
        mean_fn=mean_fn,
        noise_sd_fn=noise_sd_fn,
        true_opt=(np.array([0.9865]), -10.1316),
        seed=seed,
    )


def _sun_term(x):
    return 10.0 * np.sin(0.05 * np.pi * x) ** 6 / 2.0 ** (((x - 90.0) / 50.0) ** 2)


def sun_g(x1, x2):
    """Multimodal 2D surface maximized at g(90, 90) = 20."""
    return _sun_term(x1) + _sun_term(x2)


def make_2d_sun(seed: int = 0) -> StochasticObjective:
    """2D maximization problem on [0, 100]^2, wrapped as minimization of -g."""

    def mean_fn(x):
        x = np.atleast_1d(x)
        return -sun_g(float(x[0]), float(x[1]))

    def noise_sd_fn(x):
        x = np.atleast_1d(x)
        return np.sqrt(3.0 * (1.0 + x[0] / 100.0) ** 2 * (1.0 + x[1] / 100.0) ** 2)

    return StochasticObjective(
        name="sun2d",
        dim=2,
        bounds=np.array([[0.0, 0.0], [100.0, 100.0]]),
        mean_fn=mean_fn,
        noise_sd_fn=noise_sd_fn,
        true_opt=(np.array([90.0, 90.0]), -20.0),
        seed=seed,
        maximization=True,
    )


def logistic_transform(p: float) -> float:
    """Map a probability in (0, 1) to the real line: -ln(1/p - 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    return -np.log(1.0 / p - 1.0)


def inverse_logistic(f: float) -> float:
    return 1.0 / (1.0 + np.exp(-f))


_REGISTRY = {"paper1d": make_1d_paper, "sun2d": make_2d_sun}


def get_objective(name: str, seed: int = 0) -> StochasticObjective:
    try:
        return _REGISTRY[name](seed=seed)
    except KeyError:
        raise ValueError(f"unknown objective {name!r}; options: {sorted(_REGISTRY)}") from None
