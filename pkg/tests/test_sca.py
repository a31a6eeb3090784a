import numpy as np
import pytest

from v2v_secrecy.fista import FistaSettings, solve_fista
from v2v_secrecy.harness import best_of_restarts, grid_search
from v2v_secrecy.sca import (LN2, build_surrogate, exp2_tangent, product_lower_bound,
                             product_upper_bound, solve_sca, solve_subproblem)

from conftest import make_instance, single_link


def test_product_bounds_bracket_xy():
    rng = np.random.default_rng(0)
    x, y, xn, yn = rng.uniform(0, 10, (4, 200_000))
    assert np.all(product_upper_bound(x, y, xn, yn) - x * y >= -1e-12)
    assert np.all(product_lower_bound(x, y, xn, yn) - x * y <= 1e-12)
    assert np.allclose(product_upper_bound(xn, yn, xn, yn), xn * yn)
    assert np.allclose(product_lower_bound(xn, yn, xn, yn), xn * yn)


def test_upper_bound_with_equal_expansion_values():
    x, y = 1.7, 0.4
    assert product_upper_bound(x, y, 2.0, 2.0) == pytest.approx(0.25 * (x + y) ** 2)


def test_exp2_tangent_underestimates():
    g = np.linspace(-2, 6, 1001)
    for gn in (0.0, 0.5, 3.0):
        assert np.all(exp2_tangent(g, gn) <= 2.0 ** g - 1 + 1e-12)
        assert exp2_tangent(gn, gn) == pytest.approx(2.0 ** gn - 1)


@pytest.mark.parametrize("collapse", [True, False])
def test_expansion_point_is_feasible(inst4, collapse):
    cfg, topo, ch, w, gains = inst4
    p_n = np.random.default_rng(1).uniform(0.1, 1, (4, 4))
    model = build_surrogate(p_n, gains=gains, p_max=cfg.p_max, collapse_e2=collapse)
    pt = model.point
    z = model.pack(p_n, pt.zeta_n[model.ka, model.ma], pt.gamma_n[model.ka, model.ma],
                   pt.x1n[model.ka, model.ma])
    assert np.max(model.constraints(z)) <= 1e-9
    start = model.start_point(1e-6)
    assert np.max(model.constraints(start)) < 0


def test_inner_solution_is_safe_for_true_rates(inst4):
    cfg, topo, ch, w, gains = inst4
    p_n = np.full((4, 4), 0.5)
    model = build_surrogate(p_n, gains=gains, p_max=cfg.p_max)
    sol = solve_subproblem(model)
    p = sol.p
    cap_v = np.log2(1 + gains.sinr_v(p))[model.ka, model.ma]
    cap_e = np.log2(1 + gains.sinr_e(p))[model.ka, model.ma]
    assert np.all(cap_v >= sol.zeta - 1e-9)
    assert np.all(cap_e <= sol.gamma + 1e-9)
    assert np.all(p >= model.p_lo) and np.all(p <= model.p_hi)
    # the surrogate optimum can only improve on the expansion point
    assert gains.objective(p) >= gains.objective(p_n)


def test_single_link_subproblem_hits_p_max():
    cfg, topo, ch, w, gains = single_link(g=1.3)
    model = build_surrogate(np.array([[0.3]]), gains=gains, p_max=cfg.p_max)
    sol = solve_subproblem(model)
    assert sol.p[0, 0] == pytest.approx(cfg.p_max, rel=1e-6)


def test_single_link_subproblem_matches_grid():
    cfg, topo, ch, w, gains = single_link(g=2.0, h_ve=0.8, h_ce=0.5, h_cv=0.7)
    p_n = 0.3
    model = build_surrogate(np.array([[p_n]]), gains=gains, p_max=cfg.p_max)
    sol = solve_subproblem(model)
    # for fixed p the best zeta and gamma follow from the constraints in closed form
    G, c, D, y = model.G_a[0], model.c_a[0], model.D_a[0], model.I_a[0]
    d, gn = model.d1[0], model.gn[0]
    p = np.linspace(model.p_lo, model.p_hi, 200_001)
    e_max = d - y + 2 * np.sqrt(np.maximum(G * p - y * d, 0))
    zeta = np.log2(1 + np.maximum(e_max, 0))
    gamma = np.maximum(gn + ((c * p / D + 1) / 2 ** gn - 1) / LN2, 0)
    grid = np.max(zeta - gamma)
    assert sol.objective == pytest.approx(grid, rel=1e-3)


def test_single_link_sca_closed_form():
    cfg, topo, ch, w, gains = single_link(g=1.3)
    p, trace = solve_sca(np.array([[0.2]]), ch, topo, w, cfg)
    assert p[0, 0] == pytest.approx(cfg.p_max, rel=1e-6)
    closed = cfg.rb_bandwidth * np.log2(1 + 1.69 * cfg.p_max)
    assert trace.final_objective == pytest.approx(closed, rel=1e-6)


def test_sca_monotone_and_close_to_fista(inst4):
    cfg, topo, ch, w, gains = inst4
    p0 = np.full((4, 4), 0.5)
    p, trace = solve_sca(p0, ch, topo, w, cfg)
    obj = np.array(trace.objective_per_iter)
    assert np.all(np.diff(obj) >= -1e-9)
    assert np.all(p >= 1e-12) and np.all(p <= cfg.p_max)
    _, ft = solve_fista(p0, ch, topo, w, cfg)
    assert trace.final_objective >= 0.98 * ft.final_objective
    assert len(trace.info["kkt_residual"]) >= trace.iters


def test_generic_e2_path_agrees(inst4):
    cfg, topo, ch, w, gains = inst4
    p0 = np.full((4, 4), 0.5)
    _, a = solve_sca(p0, ch, topo, w, cfg)
    _, b = solve_sca(p0, ch, topo, w, cfg, collapse_e2=False)
    assert b.final_objective == pytest.approx(a.final_objective, rel=0.01)


def test_no_active_terms_returns_start():
    cfg, topo, ch, w, gains = single_link(g=0.5, h_ve=1.0)
    p, trace = solve_sca(np.array([[0.4]]), ch, topo, w, cfg)
    assert p[0, 0] == 0.4 and trace.iters == 0


def test_grid_spot_check():
    cfg, topo, ch, w, gains = make_instance(M=2, K=2, Nt=2, Ne=1, seed=4)
    grid, _ = grid_search(gains, cfg.p_max, 20)
    best, _ = best_of_restarts("sca", gains, cfg, restarts=5, seed=4)
    assert best >= 0.98 * grid
