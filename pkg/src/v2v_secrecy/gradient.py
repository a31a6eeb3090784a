"""Closed-form gradient of the sum secrecy rate and a finite-difference check."""

from __future__ import annotations

import numpy as np

from .phy import LinkGains, epsilon_p

__all__ = ["grad_from_gains", "grad_sum_secrecy", "finite_diff_check", "finite_diff_grad"]

LN2 = np.log(2.0)


def grad_from_gains(gains: LinkGains, p) -> np.ndarray:
    """Gradient of the sum secrecy rate (bits/s per watt), shape (K, M).

    Terms whose secrecy rate is not strictly positive contribute nothing.
    """
    p = np.asarray(p, dtype=float)
    A = p * gains.G
    B = gains.interference(p)
    C = p * gains.c_e
    D = gains.D
    active = (np.log2(1.0 + A / B) - np.log2(1.0 + C / D)) > 0

    own = gains.G / (A + B) - gains.c_e / (C + D)
    # term (j, m) differentiated w.r.t. p[k, m] through interference H[j, k, m]
    cross = np.where(active, 1.0 / (A + B) - 1.0 / B, 0.0)
    grad = np.where(active, own, 0.0) + np.einsum("jkm,jm->km", gains.H, cross)
    return gains.W / LN2 * grad


def grad_sum_secrecy(p, ch, topo, w, cfg) -> np.ndarray:
    """Gradient w.r.t. the power grid; ``p`` must lie in the feasible box."""
    p = np.asarray(p, dtype=float)
    lo = epsilon_p(cfg)
    if np.any(p < lo) or np.any(p > cfg.p_max) or not np.all(np.isfinite(p)):
        raise ValueError(f"p must lie in [{lo:g}, {cfg.p_max:g}]")
    return grad_from_gains(LinkGains.build(ch, topo, w, cfg), p)


def finite_diff_grad(fun, p, h: float) -> np.ndarray:
    """Central differences of scalar ``fun`` at every entry of ``p``."""
    p = np.asarray(p, dtype=float)
    out = np.empty_like(p)
    for idx in np.ndindex(p.shape):
        up = p.copy()
        dn = p.copy()
        up[idx] += h
        dn[idx] -= h
        out[idx] = (fun(up) - fun(dn)) / (2.0 * h)
    return out


def finite_diff_check(p, ch, topo, w, cfg, h: float, grad=None, floor: float = 1e-12) -> float:
    """Max relative error between a gradient and central differences.

    Parameters
    ----------
    grad : array, optional
        Gradient to check; defaults to the closed form at ``p``.
    floor : float
        Lower bound on the denominator of the relative error.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    gains = LinkGains.build(ch, topo, w, cfg)
    if grad is None:
        grad = grad_from_gains(gains, p)
    fd = finite_diff_grad(gains.objective, p, h)
    err = np.abs(grad - fd) / np.maximum(np.abs(grad), floor)
    return float(np.max(err))
