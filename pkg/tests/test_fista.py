import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from v2v_secrecy.fista import (CONVERGED, FistaSettings, StallWarning, lipschitz_bound,
                               project_box, solve_fista)
from v2v_secrecy.harness import best_of_restarts, grid_search

from conftest import make_instance, single_link

LINESEARCH = FistaSettings(use_linesearch=True)


def test_projection_idempotent_inside_box():
    x = np.array([[0.2, 0.7], [1e-6, 1.0]])
    assert np.array_equal(project_box(x, 1.0, 1e-12), x)


def test_projection_caps_at_p_max():
    assert np.all(project_box(np.full((3, 3), 2.0), 1.0, 1e-12) == 1.0)


def test_projection_matches_separable_qp():
    rng = np.random.default_rng(0)
    lo, hi = 1e-12, 1.0
    x = rng.uniform(-1, 2, (3, 3))
    # minimise (z - x)^2 on [lo, hi] per coordinate by enumerating candidates
    cand = np.stack([np.full_like(x, lo), np.full_like(x, hi), x])
    ok = (cand >= lo) & (cand <= hi)
    cost = np.where(ok, (cand - x) ** 2, np.inf)
    oracle = np.take_along_axis(cand, cost.argmin(0)[None], 0)[0]
    assert np.array_equal(project_box(x, hi, lo), oracle)


@pytest.mark.parametrize("s", [FistaSettings(), LINESEARCH])
def test_single_link_reaches_p_max(s):
    cfg, topo, ch, w, gains = single_link(g=1.3)
    p, trace = solve_fista(np.array([[1e-12]]), ch, topo, w, cfg, s)
    assert p[0, 0] == pytest.approx(cfg.p_max, rel=1e-9)
    closed = cfg.rb_bandwidth * np.log2(1 + cfg.p_max * 1.69 / cfg.noise_power)
    assert trace.final_objective == pytest.approx(closed, rel=1e-9)


def test_fixed_point_stops_immediately():
    cfg, topo, ch, w, gains = single_link(g=1.3)
    p, trace = solve_fista(np.array([[cfg.p_max]]), ch, topo, w, cfg, LINESEARCH)
    assert trace.iters <= 2 and trace.status == CONVERGED
    p, trace = solve_fista(np.array([[cfg.p_max]]), ch, topo, w, cfg)
    assert trace.iters <= 2


def test_iterates_feasible_and_monotone(inst4):
    cfg, topo, ch, w, gains = inst4
    seen = []
    orig = gains.objective

    class Spy:
        def __getattr__(self, name):
            return getattr(gains, name)

        def objective(self, p):
            seen.append(np.array(p))
            return orig(p)

    p, trace = solve_fista(np.full((4, 4), 0.5), settings=LINESEARCH, gains=Spy(), p_max=cfg.p_max)
    for q in seen:
        assert np.all(q >= 1e-12 * cfg.p_max) and np.all(q <= cfg.p_max)
    assert np.all(np.diff(trace.objective_per_iter) >= 0)
    assert trace.status == CONVERGED
    assert trace.relative_change() < 1e-5


def test_fixed_step_is_monotone(inst4):
    # a step below 1/L ascends on each smooth piece
    cfg, topo, ch, w, gains = inst4
    _, trace = solve_fista(np.full((4, 4), 0.5), ch, topo, w, cfg)
    assert trace.info["alpha"] == pytest.approx(0.99 / lipschitz_bound(gains))
    assert np.all(np.diff(trace.objective_per_iter) >= -1e-9 * trace.final_objective)


def test_deterministic(inst4):
    cfg, topo, ch, w, gains = inst4
    a = solve_fista(np.full((4, 4), 0.5), ch, topo, w, cfg, LINESEARCH)
    b = solve_fista(np.full((4, 4), 0.5), ch, topo, w, cfg, LINESEARCH)
    assert np.array_equal(a[0], b[0])
    assert a[1].objective_per_iter == b[1].objective_per_iter


def test_momentum_variant_runs(inst4):
    cfg, topo, ch, w, gains = inst4
    ref = solve_fista(np.full((4, 4), 0.5), ch, topo, w, cfg, LINESEARCH)[1].final_objective
    for s in (FistaSettings(use_momentum=True), FistaSettings(use_momentum=True, use_linesearch=True)):
        _, trace = solve_fista(np.full((4, 4), 0.5), ch, topo, w, cfg, s)
        assert trace.final_objective == pytest.approx(ref, rel=0.03)
        assert "momentum" in trace.method


def test_backtrack_step_rule(inst4):
    cfg, topo, ch, w, gains = inst4
    _, trace = solve_fista(np.full((4, 4), 0.5), ch, topo, w, cfg, FistaSettings(step_rule="backtrack"))
    assert 0 < trace.info["alpha"] <= 1.0


def test_stall_reported():
    cfg, topo, ch, w, gains = single_link(g=1.3)
    # an absurd sufficient-ascent constant cannot be met by any step; start at
    # the floor so that even the smallest trial steps still move p
    s = FistaSettings(use_linesearch=True, delta=1e30)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        _, trace = solve_fista(np.array([[1e-12]]), ch, topo, w, cfg, s)
    assert trace.status == "stalled"
    assert any(issubclass(c.category, StallWarning) for c in caught)


@pytest.mark.parametrize("kw", [dict(alpha=0.0), dict(delta=0.0), dict(tol=-1.0), dict(max_iters=0),
                                dict(step_rule="nope"), dict(backtrack=1.5)])
def test_bad_settings(kw):
    with pytest.raises(ValueError):
        FistaSettings(**kw)


def test_trace_csv(tmp_path, inst4):
    cfg, topo, ch, w, gains = inst4
    _, trace = solve_fista(np.full((4, 4), 0.5), ch, topo, w, cfg, LINESEARCH)
    trace.write_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iter,objective_bits_per_s,step_size,cum_time_s"
    assert len(lines) == len(trace.objective_per_iter) + 1


@pytest.mark.parametrize("seed", [0, 1])
def test_grid_spot_check(seed):
    cfg, topo, ch, w, gains = make_instance(M=2, K=2, Nt=2, Ne=1, seed=seed)
    grid, _ = grid_search(gains, cfg.p_max, 20)
    best, _ = best_of_restarts("fista-l", gains, cfg, restarts=5, seed=seed)
    assert best >= 0.98 * grid


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_linesearch_feasible_and_ascending(seed):
    cfg, topo, ch, w, gains = make_instance(M=3, K=3, Ne=2, seed=seed)
    p0 = np.random.default_rng(seed).uniform(0, 1, (3, 3))
    p, trace = solve_fista(p0, ch, topo, w, cfg, LINESEARCH)
    assert np.all(p >= 1e-12) and np.all(p <= 1.0)
    assert np.all(np.diff(trace.objective_per_iter) >= 0)
