"""Shared fixtures: small synthetic datasets and assembled surrogate models."""

import numpy as np
import pytest

from _helpers import make_dataset
from cglo.gp import GPHyperparams
from cglo.inducing import select_inducing
from cglo.model import assemble, fit_two_stage


@pytest.fixture
def small_model():
    """A fitted two-stage model on a small 1D dataset."""
    data, part = make_dataset(n=14, d=1, seed=3, K=2)
    ind = select_inducing(data, part, seed=3)
    model = fit_two_stage(data, part, ind, seed=3)
    return model, data, part, ind


@pytest.fixture
def assembled_model():
    """A model with hand-picked hyperparameters (no likelihood fit), fast."""
    data, part = make_dataset(n=12, d=2, seed=7, K=2)
    ind = select_inducing(data, part, seed=7)
    ghp = GPHyperparams(mean=0.5, variance=1.2, lengthscales=np.array([4.0, 4.0]))
    lhps = {
        r.id: GPHyperparams(mean=0.0, variance=0.3, lengthscales=np.array([9.0, 9.0]))
        for r in part.regions
    }
    model = assemble(data, part, ind, ghp, lhps)
    return model, data, part, ind
