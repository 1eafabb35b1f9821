"""Inducing-point selection: stratified clustering, counts, locality."""

import numpy as np
import pytest

from cglo.inducing import (
    default_target,
    proportional_counts,
    region_inducing,
    select_inducing,
)
from _helpers import make_dataset


def test_default_target_cap():
    assert default_target(3, 1) == 1
    assert default_target(8, 1) == 2
    assert default_target(100, 1) == 4  # 2d + 2
    assert default_target(100, 2) == 6
    assert default_target(1, 3) == 1


def test_proportional_counts_sum_and_caps():
    sizes = [10, 5, 1]
    counts = proportional_counts(sizes, 8)
    assert sum(counts) == 8
    assert all(c <= s for c, s in zip(counts, sizes))
    # full allocation returns the sizes themselves
    assert proportional_counts(sizes, 16) == sizes


def test_region_inducing_small_region_returns_points_verbatim():
    X = np.array([[0.1], [0.2], [0.3]])
    y = np.array([1.0, 2.0, 3.0])
    out = region_inducing(X, y, target=5, bands=2, seed=0)
    assert np.array_equal(out, X)


def test_region_inducing_target_and_determinism():
    rng = np.random.default_rng(0)
    X = rng.random((30, 2))
    y = rng.normal(size=30)
    a = region_inducing(X, y, target=6, bands=2, seed=4)
    b = region_inducing(X, y, target=6, bands=2, seed=4)
    assert a.shape == (6, 2)
    assert np.array_equal(a, b)


def test_select_inducing_counts_and_ordering():
    data, part = make_dataset(n=20, d=2, seed=1, K=3)
    ind = select_inducing(data, part, seed=1)
    assert ind.m == sum(ind.per_region_counts.values())
    assert sorted(ind.per_region_counts) == [r.id for r in part.regions]
    assert ind.min_pairwise_distance > 0


def test_select_inducing_region_locality():
    """Reselecting with identical per-region data keeps other regions fixed."""
    data, part = make_dataset(n=24, d=1, seed=2, K=2)
    before = select_inducing(data, part, seed=2)
    # add a point to region 1 only, then reselect
    idx2 = data.region_indices(2)
    r1 = part.regions[0]
    data.add(r1.center + 1e-3, 5, 0.0, 0.2, 1)
    after = select_inducing(data, part, seed=2)
    # region 2 block is unchanged byte for byte
    start_b = sum(before.per_region_counts[k] for k in sorted(before.per_region_counts) if k < 2)
    start_a = sum(after.per_region_counts[k] for k in sorted(after.per_region_counts) if k < 2)
    block_b = before.points[start_b : start_b + before.per_region_counts[2]]
    block_a = after.points[start_a : start_a + after.per_region_counts[2]]
    assert np.array_equal(block_a, block_b)
    assert idx2.size == before.per_region_counts[2] or before.per_region_counts[2] <= idx2.size


def test_select_inducing_empty_region_rejected():
    data, part = make_dataset(n=10, d=1, seed=3, K=2)
    # orphan region 2 by relabeling everything to region 1
    for p in data.points:
        p.region_id = 1
    with pytest.raises(RuntimeError, match="no design points"):
        select_inducing(data, part, seed=0)
