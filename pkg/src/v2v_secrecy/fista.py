"""Projected-gradient ascent on the power box (FISTA and FISTA-L).

The step size acts on the bandwidth-normalised objective ``R(p) / W``
(bits/s/Hz), so a step of 1 is a sensible starting point regardless of the
RB bandwidth.  The same normalisation applies to the sufficient-ascent
constant ``delta``.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .gradient import grad_from_gains
from .phy import LinkGains

__all__ = [
    "FistaSettings",
    "SolveTrace",
    "NonFiniteObjective",
    "StallWarning",
    "project_box",
    "initial_step",
    "lipschitz_bound",
    "solve_fista",
    "CONVERGED",
    "MAX_ITERS",
    "STALLED",
]

CONVERGED = "converged"
MAX_ITERS = "max_iters"
STALLED = "stalled"

ALPHA_MIN = 1e-20


class NonFiniteObjective(FloatingPointError):
    """The objective or gradient became NaN/inf (pathological channel)."""


class StallWarning(RuntimeWarning):
    """Linesearch backtracked below the minimum step."""


@dataclass
class FistaSettings:
    """Solver options.

    ``alpha`` is the fixed step for plain FISTA.  When it is ``None`` the
    step comes from ``step_rule``: ``"lipschitz"`` uses
    ``lipschitz_fraction / lipschitz_bound(gains)``, ``"backtrack"`` keeps
    the step found by one backtracking pass at ``p0``.  ``epsilon_p`` of
    ``None`` uses ``1e-12 * p_max``.
    """

    alpha: float | None = None
    step_rule: str = "lipschitz"
    lipschitz_fraction: float = 0.99
    delta: float = 1e-5
    max_iters: int = 20000
    tol: float = 1e-5
    use_linesearch: bool = False
    use_momentum: bool = False
    epsilon_p: float | None = None
    alpha0: float = 1.0
    backtrack: float = 0.5

    def __post_init__(self):
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if not (self.delta > 0 and self.tol > 0 and self.max_iters >= 1):
            raise ValueError("delta, tol must be > 0 and max_iters >= 1")
        if self.epsilon_p is not None and not self.epsilon_p > 0:
            raise ValueError("epsilon_p must be > 0")
        if not (0 < self.backtrack < 1 and self.alpha0 > 0):
            raise ValueError("need 0 < backtrack < 1 and alpha0 > 0")
        if self.step_rule not in ("lipschitz", "backtrack"):
            raise ValueError(f"unknown step_rule {self.step_rule!r}")
        if not 0 < self.lipschitz_fraction < 1:
            raise ValueError("lipschitz_fraction must lie in (0, 1)")


@dataclass
class SolveTrace:
    """Per-iteration history of a solve.

    Entry 0 of ``objective_per_iter`` is the objective at the starting point.
    ``cum_time_s`` is the wall time elapsed when each entry was recorded.
    """

    objective_per_iter: list = field(default_factory=list)
    step_per_iter: list = field(default_factory=list)
    cum_time_s: list = field(default_factory=list)
    wall_time_s: float = 0.0
    iters: int = 0
    status: str = MAX_ITERS
    method: str = ""
    info: dict = field(default_factory=dict)

    def record(self, objective, step, t0):
        self.objective_per_iter.append(float(objective))
        self.step_per_iter.append(float(step))
        self.cum_time_s.append(time.perf_counter() - t0)

    @property
    def final_objective(self) -> float:
        return self.objective_per_iter[-1]

    def relative_change(self) -> float:
        obj = self.objective_per_iter
        if len(obj) < 2:
            return np.inf
        return abs(obj[-1] - obj[-2]) / max(abs(obj[-2]), 1e-300)

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iter,objective_bits_per_s,step_size,cum_time_s\n")
            for i, (obj, step, t) in enumerate(zip(self.objective_per_iter,
                                                   self.step_per_iter, self.cum_time_s)):
                fh.write(f"{i},{obj!r},{step!r},{t!r}\n")


def project_box(x, p_max: float, epsilon_p: float) -> np.ndarray:
    """Euclidean projection onto ``[epsilon_p, p_max]`` (elementwise clamp)."""
    return np.clip(np.asarray(x, dtype=float), epsilon_p, p_max)


def _bits_per_hz(gains: LinkGains):
    W = gains.W
    return (lambda p: gains.objective(p) / W), (lambda p: grad_from_gains(gains, p) / W)


def _backtrack(f, p, fp, g, alpha, settings, lo, hi):
    """Largest ``alpha * backtrack**j`` passing the sufficient-ascent test."""
    while alpha >= ALPHA_MIN:
        p_new = project_box(p + alpha * g, hi, lo)
        f_new = f(p_new)
        if f_new >= fp + settings.delta * float(np.sum((p_new - p) ** 2)):
            return p_new, f_new, alpha
        alpha *= settings.backtrack
    return None, None, alpha


def initial_step(gains: LinkGains, p0, p_max: float, settings: FistaSettings | None = None) -> float:
    """Step chosen by one backtracking pass at ``p0``."""
    settings = settings or FistaSettings()
    lo = settings.epsilon_p if settings.epsilon_p is not None else 1e-12 * p_max
    f, grad = _bits_per_hz(gains)
    p0 = np.asarray(p0, dtype=float)
    _, _, alpha = _backtrack(f, p0, f(p0), grad(p0), settings.alpha0, settings, lo, p_max)
    return max(alpha, ALPHA_MIN)


def lipschitz_bound(gains: LinkGains) -> float:
    """Upper bound on the gradient Lipschitz constant of the smooth pieces.

    Each log term ``log2(c + a.p)`` has Hessian norm at most
    ``|a|^2 / (ln2 * c^2)``; the terms are summed per RB (the Hessian is
    block diagonal over RBs) and the worst RB is returned.  Units match the
    bandwidth-normalised objective.
    """
    ln2 = np.log(2.0)
    base = gains.I_cue + gains.noise  # smallest possible VUE denominator
    # a for log2(B + A): own gain plus all interferers; for log2(B): interferers
    h2 = np.sum(gains.H ** 2, axis=1)  # (K, M)
    l_v = ((gains.G ** 2 + h2) + h2) / (ln2 * base ** 2)
    l_e = gains.c_e ** 2 / (ln2 * gains.D ** 2)
    return float(np.max(np.sum(l_v + l_e, axis=0)))


def solve_fista(p0, ch=None, topo=None, w=None, cfg=None, settings: FistaSettings | None = None,
                gains: LinkGains | None = None, p_max: float | None = None):
    """Maximise the sum secrecy rate by projected gradient ascent.

    Parameters
    ----------
    p0 : (K, M) array
        Feasible starting powers.
    ch, topo, w, cfg :
        Channel, topology, eavesdropper combiner and config.  May be omitted
        when ``gains`` and ``p_max`` are given.
    settings : FistaSettings
        ``use_linesearch=True`` gives FISTA-L.

    Returns
    -------
    p : (K, M) array
    trace : SolveTrace
    """
    settings = settings or FistaSettings()
    if gains is None:
        gains = LinkGains.build(ch, topo, w, cfg)
    if p_max is None:
        p_max = cfg.p_max
    lo = settings.epsilon_p if settings.epsilon_p is not None else 1e-12 * p_max

    t0 = time.perf_counter()
    f, grad = _bits_per_hz(gains)
    W = gains.W
    p = project_box(p0, p_max, lo)
    fp = f(p)
    if not np.isfinite(fp):
        raise NonFiniteObjective("objective is not finite at the starting point")

    method = "fista-l" if settings.use_linesearch else "fista"
    if settings.use_momentum:
        method += "+momentum"
    trace = SolveTrace(method=method)
    trace.record(W * fp, 0.0, t0)

    alpha = settings.alpha
    if not settings.use_linesearch and alpha is None:
        if settings.step_rule == "lipschitz":
            alpha = settings.lipschitz_fraction / lipschitz_bound(gains)
        else:
            alpha = initial_step(gains, p, p_max, settings)
    trace.info["alpha"] = alpha

    y, p_prev, t_mom = p, p, 1.0
    status = MAX_ITERS
    for it in range(1, settings.max_iters + 1):
        base, fbase = p, fp
        if settings.use_momentum:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom ** 2))
            y = project_box(p + ((t_mom - 1.0) / t_next) * (p - p_prev), p_max, lo)
            t_mom = t_next
            base, fbase = y, f(y)
        g = grad(base)
        if not np.all(np.isfinite(g)):
            raise NonFiniteObjective(f"gradient not finite at iteration {it}")

        if settings.use_linesearch:
            p_new, f_new, step = _backtrack(f, base, fbase, g, settings.alpha0, settings, lo, p_max)
            if p_new is None:
                warnings.warn(f"linesearch stalled at iteration {it}", StallWarning, stacklevel=2)
                status = STALLED
                break
        else:
            step = alpha
            p_new = project_box(base + step * g, p_max, lo)
            f_new = f(p_new)
        if not np.isfinite(f_new):
            raise NonFiniteObjective(f"objective not finite at iteration {it}")

        if settings.use_momentum and f_new < fp:
            # adaptive restart: drop the momentum and take a plain step
            t_mom = 1.0
            g = grad(p)
            if settings.use_linesearch:
                p_new, f_new, step = _backtrack(f, p, fp, g, settings.alpha0, settings, lo, p_max)
                if p_new is None:
                    status = STALLED
                    break
            else:
                p_new = project_box(p + step * g, p_max, lo)
                f_new = f(p_new)

        moved = bool(np.any(p_new != p))
        rel = abs(f_new - fp) / max(abs(fp), 1e-300)
        p_prev, p, fp = p, p_new, f_new
        trace.record(W * fp, step, t0)
        trace.iters = it
        if not moved or rel < settings.tol:
            status = CONVERGED
            break

    trace.status = status
    trace.wall_time_s = time.perf_counter() - t0
    return p, trace
