"""Optimizer driver: configuration, initialization, stepping, full runs."""

import numpy as np
import pytest

from cglo.driver import (
    CGLOConfig,
    allocation_step,
    build_candidates,
    global_step,
    initialize,
    local_step,
    region_lhs,
    run,
)
from cglo.objectives import make_1d_paper
from cglo.partition import assign_region, assign_regions, region_bounding_boxes

SMALL = dict(n0=12, K=2, init_reps=10, r_min=10, B2=10, total_budget=400)


def test_config_resolution():
    cfg = CGLOConfig(n0=40, total_budget=1000)
    assert cfg.resolved_k(2) == 5
    assert CGLOConfig(n0=100, total_budget=1).resolved_k(1) == 10  # clamp high
    assert CGLOConfig(n0=8, total_budget=1).resolved_k(2) == 2  # clamp low
    assert CGLOConfig(K=7).resolved_k(1) == 7
    assert CGLOConfig(r_min=15).resolved_b2() == 15
    assert CGLOConfig(r_min=15, B2=4).resolved_b2() == 4


def test_config_validation_messages():
    cfg = CGLOConfig(n0=3, K=3, r_min=0, init_reps=5, total_budget=1, kappa_coef=-1)
    msgs = "\n".join(cfg.validate(1))
    for token in ("n0=", "r_min=", "total_budget=", "kappa_coef"):
        assert token in msgs
    assert "init_reps=" in "\n".join(
        CGLOConfig(n0=6, K=2, init_reps=0, total_budget=100).validate(1)
    )
    assert CGLOConfig(**SMALL, seed=0).validate(1) == []


def test_initialize_invalid_config_raises():
    with pytest.raises(ValueError, match="invalid config"):
        initialize(make_1d_paper(), CGLOConfig(n0=2, K=2, total_budget=10))


def test_initialize_state(monkeypatch):
    obj = make_1d_paper(seed=0)
    state = initialize(obj, CGLOConfig(**SMALL, seed=0))
    assert len(state.data) == 12
    assert state.budget.consumed == 12 * 10
    assert state.partition.K == 2
    # every region holds design points and candidates
    regs = assign_regions(state.partition, state.ctx.candidates)
    for r in state.partition.regions:
        assert state.data.region_indices(r.id).size > 0
        assert np.sum(regs == r.id) >= 3
    bx, bm = state.incumbent()
    assert bm == min(p.sample_mean for p in state.data.points)


def test_build_candidates_covers_every_region():
    rng = np.random.default_rng(0)
    from cglo.partition import build_partition

    pts = rng.random((30, 2))
    bounds = np.array([[0.0, 0.0], [1.0, 1.0]])
    part = build_partition(pts, 4, seed=0, bounds=bounds)
    boxes = region_bounding_boxes(part, seed=0)
    cands = build_candidates(part, boxes, 40, np.random.default_rng(1))
    regs = assign_regions(part, cands)
    for r in part.regions:
        assert np.sum(regs == r.id) >= 3


def test_region_lhs_stays_inside_region():
    rng = np.random.default_rng(2)
    from cglo.partition import build_partition

    pts = rng.random((20, 1))
    bounds = np.array([[0.0], [1.0]])
    part = build_partition(pts, 3, seed=0, bounds=bounds)
    boxes = region_bounding_boxes(part, seed=0)
    for r in part.regions:
        grid = region_lhs(part, boxes, r.id, 50, np.random.default_rng(3))
        assert grid.shape[0] > 0
        assert np.all(assign_regions(part, grid) == r.id)


def test_steps_consume_budget_and_respect_min_reps():
    obj = make_1d_paper(seed=1)
    state = initialize(obj, CGLOConfig(**SMALL, seed=1))
    gres = global_step(state)
    assert 1 <= gres.region_id <= state.partition.K
    assert gres.region_id == assign_region(state.partition, gres.x_g0)
    n_before = len(state.data)
    n_new = local_step(state, gres)
    assert len(state.data) == n_before + n_new
    b1, b2 = allocation_step(state, gres.region_id)
    assert b1 >= 0 and b2 >= 0
    required = state.budget.kappa_required(len(state.data))
    if not state.min_rep_violated:
        assert min(p.reps for p in state.data.points) >= required
    assert state.budget.consumed <= state.budget.total_budget


def test_run_trace_invariants():
    obj = make_1d_paper(seed=2)
    bx, bm, trace = run(obj, CGLOConfig(**SMALL, seed=2))
    assert trace[0].iteration == 0
    consumed = [r.consumed_reps for r in trace]
    assert consumed == sorted(consumed)
    assert consumed[-1] <= 400
    assert obj.contains(bx)
    assert bm == trace[-1].best_mean
    # iteration numbers are dense
    assert [r.iteration for r in trace] == list(range(len(trace)))


def test_run_same_seed_same_trace():
    obj = make_1d_paper(seed=4)
    _, _, t1 = run(obj, CGLOConfig(**SMALL, seed=4))
    _, _, t2 = run(obj, CGLOConfig(**SMALL, seed=4))
    assert len(t1) == len(t2)
    for a, b in zip(t1, t2):
        assert a.iteration == b.iteration
        assert a.consumed_reps == b.consumed_reps
        assert a.region == b.region
        assert a.n_new_points == b.n_new_points
        assert (a.b1, a.b2) == (b.b1, b.b2)
        assert np.array_equal(a.best_x, b.best_x)
        assert a.best_mean == b.best_mean


def test_max_local_points_cap():
    obj = make_1d_paper(seed=5)
    cfg = CGLOConfig(**SMALL, seed=5, max_local_points=1)
    _, _, trace = run(obj, cfg)
    assert all(r.n_new_points <= 1 for r in trace[1:])
