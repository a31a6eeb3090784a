"""Eavesdropper combiner, SINRs, capacities and secrecy rates.

The binary reuse indicators are folded into the powers (``q * p -> p``), so
the only decision variable is the (K, M) power grid.  A pair "reuses" RB m
when its power is above the strict-positivity floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .scenario import InterferenceTopology, ScenarioConfig, per_rb_bandwidth

__all__ = [
    "EveCombiner",
    "SecrecyEvaluation",
    "LinkGains",
    "eve_combiner",
    "sinr_vue",
    "sinr_eve",
    "evaluate",
    "sum_secrecy",
    "reuse_indicator",
    "epsilon_p",
]


def epsilon_p(cfg: ScenarioConfig) -> float:
    """Strict-positivity floor for the powers."""
    return 1e-12 * cfg.p_max


@dataclass(frozen=True)
class EveCombiner:
    """Unit-norm receive vectors ``w[k, m]`` of shape (K, M, Ne)."""

    w: np.ndarray


@dataclass(frozen=True)
class SecrecyEvaluation:
    sinr_v: np.ndarray
    sinr_e: np.ndarray
    cap_v: np.ndarray
    cap_e: np.ndarray
    secrecy: np.ndarray
    sum_secrecy: float

    @property
    def per_user(self) -> float:
        """Sum secrecy rate divided by the number of VUE pairs."""
        return self.sum_secrecy / self.secrecy.shape[0]


def eve_combiner(ch: ChannelRealization, cfg: ScenarioConfig) -> EveCombiner:
    """SINR-maximising eavesdropper combiner for every (k, m).

    The optimal ``w`` is the principal generalised eigenvector of the pencil
    ``(h_ve h_ve^H, p_c h_ce h_ce^H + sigma^2 I)``.  Since the first matrix has
    rank one this is ``(p_c h_ce h_ce^H + sigma^2 I)^{-1} h_ve``, evaluated
    with the Sherman-Morrison identity.
    """
    a = ch.h_ce[None, :, :]  # (1, M, Ne)
    b = ch.h_ve  # (K, M, Ne)
    s2 = cfg.noise_power
    pc = cfg.cue_power
    a_h_b = np.sum(a.conj() * b, axis=-1, keepdims=True)
    a_norm2 = np.sum(np.abs(a) ** 2, axis=-1, keepdims=True)
    w = (b - pc * a * a_h_b / (s2 + pc * a_norm2)) / s2
    norm = np.linalg.norm(w, axis=-1, keepdims=True)
    # a zero wiretap channel gives w = 0; any unit vector is then optimal
    fallback = np.zeros_like(w)
    fallback[..., 0] = 1.0
    w = np.where(norm > 0, w / np.where(norm > 0, norm, 1.0), fallback)
    return EveCombiner(w)


@dataclass(frozen=True)
class LinkGains:
    """Power gains entering the SINR expressions, precomputed once per channel.

    Attributes
    ----------
    G : (K, M)      ``|g_k^m|^2``
    H : (K, K, M)   ``|h_{k,k2}^m|^2`` masked by the topology, zero diagonal
    I_cue : (K, M)  ``p_c |h_{m,k}^m|^2``
    c_e : (K, M)    ``|w^H h_{k,e}^m|^2``
    D : (K, M)      ``p_c |w^H h_{m,e}^m|^2 + sigma^2 ||w||^2``
    noise : float
    W : float       RB bandwidth in Hz
    """

    G: np.ndarray
    H: np.ndarray
    I_cue: np.ndarray
    c_e: np.ndarray
    D: np.ndarray
    noise: float
    W: float

    @classmethod
    def build(cls, ch: ChannelRealization, topo: InterferenceTopology,
              w: EveCombiner, cfg: ScenarioConfig) -> "LinkGains":
        mask = topo.inter_vue_active.astype(float)[:, :, None]
        H = np.abs(ch.h_vv) ** 2 * mask
        wv = w.w
        c_e = np.abs(np.sum(wv.conj() * ch.h_ve, axis=-1)) ** 2
        i_ce = np.abs(np.sum(wv.conj() * ch.h_ce[None, :, :], axis=-1)) ** 2
        w_norm2 = np.sum(np.abs(wv) ** 2, axis=-1)
        return cls(
            G=np.abs(ch.g) ** 2,
            H=H,
            I_cue=cfg.cue_power * np.abs(ch.h_cv) ** 2,
            c_e=c_e,
            D=cfg.cue_power * i_ce + cfg.noise_power * w_norm2,
            noise=float(cfg.noise_power),
            W=per_rb_bandwidth(cfg),
        )

    @property
    def shape(self):
        return self.G.shape

    def interference(self, p):
        """Denominator of the VUE SINR: interference plus noise, (K, M)."""
        return np.einsum("kjm,jm->km", self.H, p) + self.I_cue + self.noise

    def sinr_v(self, p):
        return p * self.G / self.interference(p)

    def sinr_e(self, p):
        return p * self.c_e / self.D

    def rate_terms(self, p):
        """Per-(k, m) ``log2(1+S) - log2(1+S_e)`` in bits/s/Hz, unclipped."""
        return np.log2(1.0 + self.sinr_v(p)) - np.log2(1.0 + self.sinr_e(p))

    def objective(self, p) -> float:
        """Sum secrecy rate in bits/s."""
        return self.W * float(np.sum(np.maximum(self.rate_terms(p), 0.0)))

    def objective_batch(self, P):
        """Objective for a stack of power grids ``P`` with shape (N, K, M)."""
        P = np.asarray(P, dtype=float)
        B = np.einsum("kjm,njm->nkm", self.H, P) + self.I_cue + self.noise
        terms = np.log2(1.0 + P * self.G / B) - np.log2(1.0 + P * self.c_e / self.D)
        return self.W * np.maximum(terms, 0.0).sum(axis=(1, 2))


def sinr_vue(p, ch: ChannelRealization, topo: InterferenceTopology,
             cfg: ScenarioConfig) -> np.ndarray:
    """Received SINR of every VUE pair on every RB, shape (K, M)."""
    p = np.asarray(p, dtype=float)
    mask = topo.inter_vue_active.astype(float)[:, :, None]
    interference = np.einsum("kjm,jm->km", np.abs(ch.h_vv) ** 2 * mask, p)
    denom = interference + cfg.cue_power * np.abs(ch.h_cv) ** 2 + cfg.noise_power
    return p * np.abs(ch.g) ** 2 / denom


def sinr_eve(p, ch: ChannelRealization, w: EveCombiner, cfg: ScenarioConfig) -> np.ndarray:
    """Eavesdropper SINR for every (k, m) with combiner ``w``."""
    p = np.asarray(p, dtype=float)
    wv = w.w
    num = np.abs(np.sum(wv.conj() * ch.h_ve, axis=-1)) ** 2
    i_ce = np.abs(np.sum(wv.conj() * ch.h_ce[None, :, :], axis=-1)) ** 2
    denom = cfg.cue_power * i_ce + cfg.noise_power * np.sum(np.abs(wv) ** 2, axis=-1)
    return p * num / denom


def evaluate(p, ch: ChannelRealization, topo: InterferenceTopology, w: EveCombiner,
             cfg: ScenarioConfig) -> SecrecyEvaluation:
    """Capacities and secrecy rates (bits/s) for power grid ``p``."""
    W = per_rb_bandwidth(cfg)
    s_v = sinr_vue(p, ch, topo, cfg)
    s_e = sinr_eve(p, ch, w, cfg)
    cap_v = W * np.log2(1.0 + s_v)
    cap_e = W * np.log2(1.0 + s_e)
    secrecy = np.maximum(cap_v - cap_e, 0.0)
    # fixed C-order summation
    total = float(np.sum(secrecy.ravel()))
    return SecrecyEvaluation(s_v, s_e, cap_v, cap_e, secrecy, total)


def sum_secrecy(p, ch, topo, w, cfg) -> float:
    return evaluate(p, ch, topo, w, cfg).sum_secrecy


def reuse_indicator(p, threshold: float) -> np.ndarray:
    """Recovered binary reuse assignment: 1 where ``p > threshold``."""
    return (np.asarray(p) > threshold).astype(int)
