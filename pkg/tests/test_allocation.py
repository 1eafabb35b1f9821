"""Replication budgeting: minimum-replication schedule and OCBA splits."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cglo.allocation import (
    DELTA_FLOOR,
    SD_FLOOR,
    BudgetState,
    _largest_remainder,
    apply_plan,
    min_rep_topup,
    ocba_allocate,
)
from cglo.data import Dataset
from cglo.objectives import make_1d_paper

UNIT = np.array([[0.0], [1.0]])


def _budget(total=500, r_min=10, B2=20, coef=0.1):
    return BudgetState(total_budget=total, r_min=r_min, B2=B2, kappa_coef=coef)


def test_budget_state_validation():
    with pytest.raises(ValueError):
        BudgetState(total_budget=0, r_min=10, B2=10)
    with pytest.raises(ValueError):
        BudgetState(total_budget=10, r_min=10, B2=10, kappa_coef=0.0)


def test_kappa_schedule():
    bs = _budget(coef=0.1)
    assert bs.kappa_required(10) == 1
    assert bs.kappa_required(11) == 2
    assert bs.kappa_required(100) == 10


def test_largest_remainder_sums_exactly():
    quotas = np.array([1.4, 2.3, 0.3])
    counts = _largest_remainder(quotas, 4)
    assert counts.sum() == 4
    assert np.all(np.abs(counts - quotas) < 1.0)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(0.01, 50.0), min_size=2, max_size=10),
    st.integers(1, 200),
)
def test_largest_remainder_properties(weights, total):
    quotas = np.asarray(weights) * total / sum(weights)
    counts = _largest_remainder(quotas, total)
    assert counts.sum() == total
    assert np.all(counts >= 0)
    assert np.all(np.abs(counts - quotas) < 1.0)


def test_ocba_sums_exactly_and_respects_reference():
    points = [(1.0, 0.5, 0), (1.2, 0.8, 1), (2.0, 0.3, 2)]
    plan = ocba_allocate(points, 37)
    assert sum(plan.values()) == 37
    assert set(plan) == {0, 1, 2}


def test_ocba_single_point_gets_everything():
    assert ocba_allocate([(0.3, 1.0, 7)], 12) == {7: 12}


def test_ocba_tie_on_best_mean_goes_to_lowest_id():
    points = [(1.0, 0.5, 3), (1.0, 0.5, 1), (2.0, 0.5, 2)]
    plan = ocba_allocate(points, 50)
    # id 1 is the reference (best), so its tied twin at id 3 competes with a
    # floored gap and must soak up nearly all the budget
    assert plan[3] > plan[2]


def test_ocba_rejects_bad_input():
    with pytest.raises(ValueError):
        ocba_allocate([], 10)
    with pytest.raises(ValueError):
        ocba_allocate([(0.0, 1.0, 0)], 0)


def test_ocba_matches_continuous_ratios():
    """Integer plan within one replication of the direct continuous rule."""
    rng = np.random.default_rng(0)
    means = np.sort(rng.normal(size=6))
    sds = 0.2 + rng.random(6)
    B2 = 100
    plan = ocba_allocate([(means[i], sds[i], i) for i in range(6)], B2)
    gaps = np.maximum(means - means[0], DELTA_FLOOR)
    w = (np.maximum(sds, SD_FLOOR) / gaps) ** 2
    w[0] = sds[0] * np.sqrt(np.sum((w[1:] / sds[1:]) ** 2))
    quotas = w * B2 / w.sum()
    for i in range(6):
        assert abs(plan[i] - quotas[i]) < 1.0


def test_min_rep_topup_basic():
    data = Dataset(bounds=UNIT)
    for i in range(15):
        data.add([i / 15], 1 if i < 3 else 5, 0.0, 0.0, 1)
    bs = _budget(total=1000, coef=0.2)  # requires ceil(0.2 * 15) = 3 reps
    plan = min_rep_topup(data, bs)
    assert plan == {0: 2, 1: 2, 2: 2}


def test_min_rep_topup_truncates_to_remaining_budget():
    data = Dataset(bounds=UNIT)
    for i in range(10):
        data.add([i / 10], 1, 0.0, 0.0, 1)
    bs = _budget(total=100, coef=1.0)
    bs.charge(95)  # only 5 replications left; full plan would need 90
    plan = min_rep_topup(data, bs)
    assert sum(plan.values()) == 5


def test_apply_plan_streams_replications():
    obj = make_1d_paper(seed=0)
    data = Dataset(bounds=obj.bounds)
    from cglo.objectives import evaluate

    x = np.array([0.3])
    m, v, r = evaluate(obj, x, 5)
    data.add(x, r, m, v * (r - 1), 1)
    _, consumed = apply_plan(obj, data, {0: 7})
    assert consumed == 7
    assert data.points[0].reps == 12
    # merged moments equal a single 12-replication evaluation
    m12, v12, _ = evaluate(obj, x, 12)
    assert data.points[0].sample_mean == pytest.approx(m12, rel=1e-12)
    assert data.points[0].sample_var == pytest.approx(v12, rel=1e-9)
