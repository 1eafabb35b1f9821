"""CGLO: combined global/local Gaussian-process search for noisy black-box
minimization, built on a two-stage sparse global + per-region local surrogate."""

from cglo.driver import CGLOConfig, run
from cglo.objectives import get_objective

__all__ = ["CGLOConfig", "run", "get_objective"]
