"""Successive convex approximation of the sum secrecy rate problem.

Each outer iteration builds a convex inner approximation of the problem
around the current powers and solves it with a log-barrier Newton method.
Slack rates are per Hz.  For every pair with positive secrecy at the
expansion point the subproblem carries

* ``zeta`` - a lower bound on the legitimate rate, through
  ``e >= 2**zeta - 1`` and the quadratic majorant of ``e * y1 <= t1``;
* ``gamma`` - an upper bound on the eavesdropper rate, through the tangent
  minorant of ``2**gamma - 1`` (and, optionally, the concave minorant of the
  product ``x2 * y2 >= t2``).

Pairs with zero secrecy at the expansion point are left out of the
objective, which makes ``sum(zeta - gamma)`` over the remaining pairs a
minorant of the clipped sum that is tight at the expansion point.  The true
objective therefore never decreases from one outer iteration to the next.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .fista import CONVERGED, MAX_ITERS, SolveTrace
from .phy import LinkGains

__all__ = [
    "InfeasibleExpansion",
    "BarrierDivergence",
    "NumericalIllConditioning",
    "SurrogatePoint",
    "SubproblemModel",
    "SubproblemSolution",
    "product_upper_bound",
    "product_lower_bound",
    "exp2_tangent",
    "build_surrogate",
    "solve_subproblem",
    "solve_sca",
]

LN2 = np.log(2.0)


class InfeasibleExpansion(RuntimeError):
    """The expansion point violates its own surrogate."""


class BarrierDivergence(RuntimeError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


class NumericalIllConditioning(RuntimeError):
    """Newton system could not be factorised; rescale the channel gains."""


def product_upper_bound(x, y, xn, yn):
    """Convex majorant of ``x * y``, tight at ``(xn, yn)``."""
    d = xn - yn
    return 0.25 * ((x + y) ** 2 - 2.0 * (x - y) * d + d ** 2)


def product_lower_bound(x, y, xn, yn):
    """Concave minorant of ``x * y``, tight at ``(xn, yn)``."""
    s = xn + yn
    return 0.25 * (2.0 * (x + y) * s - s ** 2 - (x - y) ** 2)


def exp2_tangent(gamma, gamma_n):
    """Tangent of ``2**gamma - 1`` at ``gamma_n``; a global under-estimator."""
    return 2.0 ** gamma_n * (1.0 + LN2 * (gamma - gamma_n)) - 1.0


@dataclass(frozen=True)
class SurrogatePoint:
    """Linearisation constants at the expansion point, all shape (K, M)."""

    x1n: np.ndarray
    y1n: np.ndarray
    x2n: np.ndarray
    y2n: np.ndarray
    zeta_n: np.ndarray
    gamma_n: np.ndarray
    active: np.ndarray


@dataclass
class SubproblemModel:
    """Convex subproblem around one expansion point.

    The decision vector is ``z = [p (K*M), zeta (n), gamma (n), e (n)]`` with
    ``n`` the number of active pairs.  Every constraint is ``f(z) <= 0``.
    """

    gains: LinkGains
    point: SurrogatePoint
    p_n: np.ndarray
    p_lo: float
    p_hi: float
    collapse_e2: bool = True
    # derived
    ka: np.ndarray = field(init=False, repr=False)
    ma: np.ndarray = field(init=False, repr=False)
    Y: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        K, M = self.gains.shape
        self.ka, self.ma = np.nonzero(self.point.active)
        n = self.ka.size
        # Y[a, j*M + m_a] = H[k_a, j, m_a]: gradient of y1 for pair a
        Y = np.zeros((n, K * M))
        for a, (k, m) in enumerate(zip(self.ka, self.ma)):
            Y[a, np.arange(K) * M + m] = self.gains.H[k, :, m]
        self.Y = Y
        a = np.arange(n)
        self.own = self.ka * M + self.ma  # flat index of p[k_a, m_a]
        self.i_zeta = K * M + a
        self.i_gamma = K * M + n + a
        self.i_e = K * M + 2 * n + a
        g = self.gains
        self.G_a = g.G[self.ka, self.ma]
        self.c_a = g.c_e[self.ka, self.ma]
        self.D_a = g.D[self.ka, self.ma]
        self.I_a = g.I_cue[self.ka, self.ma] + g.noise
        pt = self.point
        self.x1n_a = pt.x1n[self.ka, self.ma]
        self.y1n_a = pt.y1n[self.ka, self.ma]
        self.d1 = self.x1n_a - self.y1n_a
        self.x2n_a = pt.x2n[self.ka, self.ma]
        self.d2 = (pt.x2n - pt.y2n)[self.ka, self.ma]
        self.gn = pt.gamma_n[self.ka, self.ma]
        self.lprime = 2.0 ** self.gn * LN2

    @property
    def n_active(self) -> int:
        return self.ka.size

    @property
    def n_vars(self) -> int:
        K, M = self.gains.shape
        return K * M + 3 * self.n_active

    @property
    def n_constraints(self) -> int:
        K, M = self.gains.shape
        return 2 * K * M + 5 * self.n_active

    def split(self, z):
        K, M = self.gains.shape
        n = self.n_active
        p = z[:K * M]
        return p, z[K * M:K * M + n], z[K * M + n:K * M + 2 * n], z[K * M + 2 * n:]

    def pack(self, p, zeta, gamma, e):
        return np.concatenate([np.ravel(p), zeta, gamma, e])

    def objective(self, z) -> float:
        """Surrogate objective ``sum(zeta - gamma)`` in bits/s/Hz."""
        _, zeta, gamma, _ = self.split(z)
        return float(np.sum(zeta) - np.sum(gamma))

    def _parts(self, z):
        p, zeta, gamma, e = self.split(z)
        y1 = self.Y @ p + self.I_a
        t1 = self.G_a * p[self.own]
        t2 = self.c_a * p[self.own]
        l2 = exp2_tangent(gamma, self.gn)
        return p, zeta, gamma, e, y1, t1, t2, l2

    def constraint_groups(self, z) -> dict:
        """Constraint values by group, each array ``<= 0`` when feasible."""
        p, zeta, gamma, e, y1, t1, t2, l2 = self._parts(z)
        if self.collapse_e2:
            e2 = t2 - l2 * self.D_a
        else:
            e2 = t2 - product_lower_bound(l2, self.D_a, self.x2n_a, self.D_a)
        return {
            "p_hi": p - self.p_hi,
            "p_lo": self.p_lo - p,
            "zeta": -zeta,
            "gamma": -gamma,
            "exp": np.expm1(LN2 * zeta) - e,
            "e1": product_upper_bound(e, y1, self.x1n_a, self.y1n_a) - t1,
            "e2": e2,
        }

    def constraints(self, z) -> np.ndarray:
        return np.concatenate(list(self.constraint_groups(z).values()))

    def barrier_derivatives(self, z, t):
        """Value, gradient and Hessian of ``-t * objective + barrier``."""
        n = self.n_active
        nv = self.n_vars
        KM = nv - 3 * n
        p, zeta, gamma, e, y1, t1, t2, l2 = self._parts(z)
        f = self.constraint_groups(z)
        if any(np.any(v >= 0) for v in f.values()):
            return np.inf, None, None
        value = -t * self.objective(z) - sum(float(np.sum(np.log(-v))) for v in f.values())

        grad = np.zeros(nv)
        grad[KM:KM + n] = -t
        grad[KM + n:KM + 2 * n] = t
        hess = np.zeros((nv, nv))
        diag = np.zeros(nv)

        # box and sign bounds: f = +-z_i + const
        r_hi, r_lo = -1.0 / f["p_hi"], -1.0 / f["p_lo"]
        grad[:KM] += r_hi - r_lo
        diag[:KM] += r_hi ** 2 + r_lo ** 2
        r = -1.0 / f["zeta"]
        grad[self.i_zeta] -= r
        diag[self.i_zeta] += r ** 2
        r = -1.0 / f["gamma"]
        grad[self.i_gamma] -= r
        diag[self.i_gamma] += r ** 2

        # exp: d/dzeta = ln2 * 2**zeta, d/de = -1
        r = -1.0 / f["exp"]
        dz = LN2 * 2.0 ** zeta
        grad[self.i_zeta] += r * dz
        grad[self.i_e] -= r
        diag[self.i_zeta] += r ** 2 * dz ** 2 + r * LN2 * dz
        diag[self.i_e] += r ** 2
        hess[self.i_zeta, self.i_e] -= r ** 2 * dz
        hess[self.i_e, self.i_zeta] -= r ** 2 * dz

        # e2: d/dp_own = c, d/dgamma = -dh/dgamma
        r = -1.0 / f["e2"]
        if self.collapse_e2:
            dg = -self.lprime * self.D_a
            curv = 0.0
        else:
            dg = -self.lprime * (self.D_a - 0.5 * ((l2 - self.D_a) - self.d2))
            curv = 0.5 * self.lprime ** 2
        grad[self.own] += r * self.c_a
        grad[self.i_gamma] += r * dg
        diag[self.own] += r ** 2 * self.c_a ** 2
        diag[self.i_gamma] += r ** 2 * dg ** 2 + r * curv
        hess[self.own, self.i_gamma] += r ** 2 * self.c_a * dg
        hess[self.i_gamma, self.own] += r ** 2 * self.c_a * dg

        # e1: quadratic in u = e + y1; gradient rows J1, curvature 0.5 * u u^T
        r = -1.0 / f["e1"]
        u = e + y1
        coef_y = 0.5 * u + 0.5 * self.d1
        J1 = np.zeros((n, nv))
        J1[:, :KM] = coef_y[:, None] * self.Y
        J1[np.arange(n), self.own] -= self.G_a
        J1[np.arange(n), self.i_e] = 0.5 * u - 0.5 * self.d1
        U = np.zeros((n, nv))
        U[:, :KM] = self.Y
        U[np.arange(n), self.i_e] = 1.0
        grad += J1.T @ r
        hess += (J1.T * r ** 2) @ J1 + (U.T * (0.5 * r)) @ U

        hess[np.diag_indices(nv)] += diag
        return value, grad, hess

    def start_point(self, relax: float = 1e-6):
        """Strictly feasible point next to the expansion point."""
        span = self.p_hi - self.p_lo
        p = np.clip(np.ravel(self.p_n), self.p_lo + relax * span, self.p_hi - relax * span)
        y1 = self.Y @ p + self.I_a
        t1 = self.G_a * p[self.own]
        t2 = self.c_a * p[self.own]
        # roots of the majorant in e: (d - y) +- 2 sqrt(t1 - y d), d = x1n - y1n
        disc = t1 - y1 * self.d1
        if np.any(disc <= 0):
            raise InfeasibleExpansion("expansion point violates the E1 surrogate")
        root = 2.0 * np.sqrt(disc)
        e_hi = self.d1 - y1 + root
        e_lo = np.maximum(self.d1 - y1 - root, 0.0)
        if np.any(e_hi <= e_lo):
            raise InfeasibleExpansion("empty E1 interval at the expansion point")
        e = e_hi - relax * (e_hi - e_lo)
        zeta = (1.0 - relax) * np.log2(1.0 + e)
        if self.collapse_e2:
            l_req = t2 / self.D_a
        else:
            # smaller root of the concave minorant = t2, on its increasing branch
            D, d2 = self.D_a, self.d2
            disc2 = (3 * D + d2) ** 2 - (D + d2) ** 2 - 4.0 * t2
            if np.any(disc2 <= 0):
                raise InfeasibleExpansion("expansion point violates the E2 surrogate")
            l_req = (3 * D + d2) - np.sqrt(disc2)
            l_top = 3 * D + d2
            l_req = l_req + relax * (l_top - l_req)
        gamma_req = self.gn + ((l_req + 1.0) / 2.0 ** self.gn - 1.0) / LN2
        gamma = np.maximum(gamma_req, 0.0) + relax * (1.0 + np.abs(gamma_req))
        z = self.pack(p, zeta, gamma, e)
        worst = float(np.max(self.constraints(z)))
        if worst >= 0:
            raise InfeasibleExpansion(f"relaxed start not strictly feasible (max f = {worst:g})")
        return z


def expansion_point(gains: LinkGains, p_n) -> SurrogatePoint:
    p_n = np.asarray(p_n, dtype=float)
    y1n = gains.interference(p_n)
    x1n = p_n * gains.G / y1n
    y2n = gains.D
    x2n = p_n * gains.c_e / y2n
    zeta_n = np.log2(1.0 + x1n)
    gamma_n = np.log2(1.0 + x2n)
    return SurrogatePoint(x1n, y1n, x2n, y2n, zeta_n, gamma_n, active=zeta_n - gamma_n > 0)


def build_surrogate(p_n, ch=None, topo=None, w=None, cfg=None, gains: LinkGains | None = None,
                    p_max: float | None = None, collapse_e2: bool = True) -> SubproblemModel:
    """Convex inner approximation of the problem around ``p_n``."""
    if gains is None:
        gains = LinkGains.build(ch, topo, w, cfg)
    if p_max is None:
        p_max = cfg.p_max
    p_n = np.asarray(p_n, dtype=float)
    if np.any(p_n <= 0) or np.any(p_n > p_max):
        raise InfeasibleExpansion("expansion point outside the power box")
    model = SubproblemModel(gains, expansion_point(gains, p_n), p_n, 1e-12 * p_max, p_max,
                            collapse_e2=collapse_e2)
    if model.n_active:
        pt = model.point
        z_n = model.pack(p_n, pt.zeta_n[model.ka, model.ma], pt.gamma_n[model.ka, model.ma],
                         pt.x1n[model.ka, model.ma])
        groups = model.constraint_groups(z_n)
        # the power box is checked above; slacks may sit on their bounds
        worst = max(float(np.max(groups[g])) for g in ("exp", "e1", "e2"))
        if worst > 1e-9 * max(1.0, float(np.max(pt.y1n))):
            raise InfeasibleExpansion(f"expansion point violates its surrogate by {worst:g}")
    return model


@dataclass
class SubproblemSolution:
    p: np.ndarray
    zeta: np.ndarray
    gamma: np.ndarray
    e: np.ndarray
    objective: float
    newton_steps: int
    kkt_residual: float
    duality_gap: float
    z: np.ndarray = field(repr=False)


def _newton_direction(hess, grad):
    d = np.sqrt(np.abs(np.diag(hess)))
    d[d == 0] = 1.0
    scaled = hess / d[:, None] / d[None, :]
    try:
        cf = scipy.linalg.cho_factor(scaled, check_finite=False)
        return -scipy.linalg.cho_solve(cf, grad / d, check_finite=False) / d
    except (np.linalg.LinAlgError, ValueError):
        sol, *_ = np.linalg.lstsq(scaled, -grad / d, rcond=None)
        if not np.all(np.isfinite(sol)):
            raise NumericalIllConditioning("Newton system is singular") from None
        return sol / d


def solve_subproblem(model: SubproblemModel, tol_kkt: float = 1e-8, t0: float = 1.0,
                     mu: float = 10.0, t_final: float = 1e8, max_newton: int = 200,
                     relax: float = 1e-6) -> SubproblemSolution:
    """Solve the convex subproblem with a log-barrier method.

    Centering uses damped Newton steps with a backtracking line search that
    keeps the iterate strictly feasible.  It stops when ``lambda**2 / (2 t)``
    (``lambda`` the Newton decrement) drops below ``tol_kkt``: the centering
    error measured in objective units (bits/s/Hz).  The barrier weight ``t`` grows
    by ``mu`` from ``t0`` to ``t_final``.
    """
    K, M = model.gains.shape
    if model.n_active == 0:
        z = model.pack(model.p_n, [], [], [])
        return SubproblemSolution(model.p_n.copy(), np.array([]), np.array([]), np.array([]),
                                  0.0, 0, 0.0, 0.0, z)
    z = model.start_point(relax)
    t = t0
    steps = 0
    history = []
    lam2 = np.inf
    while True:
        for _ in range(max_newton):
            value, grad, hess = model.barrier_derivatives(z, t)
            if not np.isfinite(value):
                raise BarrierDivergence("iterate left the interior", history)
            dz = _newton_direction(hess, grad)
            lam2 = float(-grad @ dz)
            history.append((t, value, lam2))
            if lam2 / (2.0 * t) <= tol_kkt:
                break
            if not np.isfinite(lam2) or lam2 < 0:
                raise NumericalIllConditioning(f"bad Newton decrement {lam2!r} at t={t:g}")
            s = 1.0
            while True:
                z_try = z + s * dz
                v_try = _barrier_value(model, z_try, t)
                if np.isfinite(v_try) and v_try <= value - 0.01 * s * lam2:
                    break
                s *= 0.5
                if s < 1e-14:
                    break
            if s < 1e-14:
                # no progress possible at this t; accept the current center
                break
            z = z_try
            steps += 1
        else:
            raise BarrierDivergence(f"centering did not converge at t={t:g}", history)
        if t >= t_final:
            break
        t = min(t * mu, t_final)

    p, zeta, gamma, e = model.split(z)
    return SubproblemSolution(
        p=p.reshape(K, M).copy(), zeta=zeta.copy(), gamma=gamma.copy(), e=e.copy(),
        objective=model.objective(z), newton_steps=steps, kkt_residual=lam2 / (2.0 * t),
        duality_gap=model.n_constraints / t, z=z,
    )


def _barrier_value(model: SubproblemModel, z, t) -> float:
    f = model.constraints(z)
    if np.any(f >= 0):
        return np.inf
    return -t * model.objective(z) - float(np.sum(np.log(-f)))


def solve_sca(p0, ch=None, topo=None, w=None, cfg=None, outer_tol: float = 1e-5,
              max_outer: int = 200, gains: LinkGains | None = None, p_max: float | None = None,
              collapse_e2: bool = True, **inner):
    """Maximise the sum secrecy rate by successive convex approximation.

    The trace records the true sum secrecy rate (bits/s) after each outer
    iteration; ``step_per_iter`` holds the norm of the power update.

    Returns
    -------
    p : (K, M) array
    trace : SolveTrace
    """
    if gains is None:
        gains = LinkGains.build(ch, topo, w, cfg)
    if p_max is None:
        p_max = cfg.p_max
    t_start = time.perf_counter()
    p = np.clip(np.asarray(p0, dtype=float), 1e-12 * p_max, p_max)
    R = gains.objective(p)
    trace = SolveTrace(method="sca")
    trace.record(R, 0.0, t_start)
    trace.info.update(newton_steps=0, rejected=0, kkt_residual=[], duality_gap=[],
                      terminal_change=0.0)
    status = MAX_ITERS
    for it in range(1, max_outer + 1):
        try:
            model = build_surrogate(p, gains=gains, p_max=p_max, collapse_e2=collapse_e2)
            sol = solve_subproblem(model, **inner)
        except BarrierDivergence as exc:
            raise BarrierDivergence(f"outer iteration {it}: {exc}", exc.history) from exc
        except (NumericalIllConditioning, InfeasibleExpansion) as exc:
            raise type(exc)(f"outer iteration {it}: {exc}") from exc
        trace.info["newton_steps"] += sol.newton_steps
        trace.info["kkt_residual"].append(sol.kkt_residual)
        trace.info["duality_gap"].append(sol.duality_gap)
        R_new = gains.objective(sol.p)
        # signed change of the candidate, kept even when the step is rejected
        trace.info["terminal_change"] = (R_new - R) / max(abs(R), 1e-300)
        if model.n_active == 0 or R_new < R:
            # nothing to optimise, or the inexact inner solve lost ground
            if model.n_active and R_new < R:
                trace.info["rejected"] += 1
            status = CONVERGED
            break
        rel = trace.info["terminal_change"]
        step = float(np.linalg.norm(sol.p - p))
        p, R = sol.p, R_new
        trace.record(R, step, t_start)
        trace.iters = it
        if rel < outer_tol:
            status = CONVERGED
            break
    trace.status = status
    trace.wall_time_s = time.perf_counter() - t_start
    return p, trace
