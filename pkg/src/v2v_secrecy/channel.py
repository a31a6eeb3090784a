"""Rician block-fading channel generation and CSV dump/load.

Every link draws from its own random stream keyed by ``(seed, link class,
indices)``.  A link's coefficient therefore does not depend on ``K``, ``M``
or ``Ne``: the channels of a K=2 scenario are a sub-array of the K=4
scenario with the same seed, and an ``Ne``-antenna eavesdropper vector is a
prefix of the ``Ne + 1`` one.  Sweeps over those sizes use common random
numbers.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass

import numpy as np

from .scenario import InterferenceTopology, ScenarioConfig

__all__ = ["ChannelRealization", "draw_channels", "rician", "save_channels_csv",
           "load_channels_csv", "channel_digest"]

# stream ids per link class
_LINK_IDS = {"g": 1, "vv": 2, "cv": 3, "ce": 4, "ve": 5}


@dataclass(frozen=True)
class ChannelRealization:
    """All complex channel coefficients of one coherence interval.

    Attributes
    ----------
    g : (K, M) complex
        Desired V2V link of pair k on RB m.
    h_vv : (K, K, M) complex
        ``h_vv[k, k2, m]``: VUE transmitter k2 to VUE receiver k on RB m.
        Zero on the diagonal and for inactive pairs.
    h_cv : (K, M) complex
        CUE m to VUE receiver k on RB m.
    h_ce : (M, Ne) complex
        CUE m to the eavesdropper.
    h_ve : (K, M, Ne) complex
        VUE transmitter k to the eavesdropper on RB m.
    """

    g: np.ndarray
    h_vv: np.ndarray
    h_cv: np.ndarray
    h_ce: np.ndarray
    h_ve: np.ndarray

    def __post_init__(self):
        K, M = self.g.shape
        Ne = self.h_ce.shape[1]
        expected = {"h_vv": (K, K, M), "h_cv": (K, M), "h_ce": (M, Ne), "h_ve": (K, M, Ne)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        for name in ("g", "h_vv", "h_cv", "h_ce", "h_ve"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite entries")

    @property
    def K(self) -> int:
        return self.g.shape[0]

    @property
    def M(self) -> int:
        return self.g.shape[1]

    @property
    def Ne(self) -> int:
        return self.h_ce.shape[1]


def rician(k_factor: float, los_phase, nlos) -> np.ndarray:
    """Combine a unit-modulus LOS term with an NLOS draw.

    ``h = sqrt(1/(1+k)) * (sqrt(k) * exp(1j*phase) + nlos)``
    """
    los = np.exp(1j * np.asarray(los_phase))
    return np.sqrt(1.0 / (1.0 + k_factor)) * (np.sqrt(k_factor) * los + nlos)


def _link_rng(seed: int, link: str, *idx: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), _LINK_IDS[link], *map(int, idx)])


def _draw_link(rng: np.random.Generator, k_factor: float, n: int | None = None):
    phase = rng.uniform(0.0, 2.0 * np.pi)
    shape = (1, 2) if n is None else (n, 2)
    z = rng.standard_normal(shape)
    nlos = (z[:, 0] + 1j * z[:, 1]) / np.sqrt(2.0)
    h = rician(k_factor, phase, nlos)
    return h[0] if n is None else h


def draw_channels(cfg: ScenarioConfig, topo: InterferenceTopology,
                  seed: int | None = None) -> ChannelRealization:
    """Draw one channel realization.

    Parameters
    ----------
    cfg : ScenarioConfig
    topo : InterferenceTopology
        Inactive inter-VUE links are set to exactly zero.
    seed : int, optional
        Defaults to ``cfg.seed``.
    """
    seed = cfg.seed if seed is None else seed
    K, M, Ne, kf = cfg.K, cfg.M, cfg.Ne, cfg.rician_k

    g = np.empty((K, M), complex)
    h_cv = np.empty((K, M), complex)
    h_vv = np.zeros((K, K, M), complex)
    h_ce = np.empty((M, Ne), complex)
    h_ve = np.empty((K, M, Ne), complex)
    for m in range(M):
        h_ce[m] = _draw_link(_link_rng(seed, "ce", m), kf, Ne)
        for k in range(K):
            g[k, m] = _draw_link(_link_rng(seed, "g", k, m), kf)
            h_cv[k, m] = _draw_link(_link_rng(seed, "cv", k, m), kf)
            h_ve[k, m] = _draw_link(_link_rng(seed, "ve", k, m), kf, Ne)
            for k2 in range(K):
                if k2 != k and topo.inter_vue_active[k, k2]:
                    h_vv[k, k2, m] = _draw_link(_link_rng(seed, "vv", k, k2, m), kf)

    return ChannelRealization(
        g=np.sqrt(cfg.scale_g) * g,
        h_vv=np.sqrt(cfg.scale_vv) * h_vv,
        h_cv=np.sqrt(cfg.scale_cv) * h_cv,
        h_ce=np.sqrt(cfg.scale_ce) * h_ce,
        h_ve=np.sqrt(cfg.scale_ve) * h_ve,
    )


# ---------------------------------------------------------------------------
# CSV round trip: link_type, k, k2, m, antenna, re, im  (-1 = not applicable)

_COLUMNS = ("link_type", "k", "k2", "m", "antenna", "re", "im")


def _rows(ch: ChannelRealization):
    K, M, Ne = ch.K, ch.M, ch.Ne
    for k in range(K):
        for m in range(M):
            yield "g", k, -1, m, -1, ch.g[k, m]
    for k in range(K):
        for k2 in range(K):
            if k2 == k:
                continue
            for m in range(M):
                yield "vv", k, k2, m, -1, ch.h_vv[k, k2, m]
    for k in range(K):
        for m in range(M):
            yield "cv", k, -1, m, -1, ch.h_cv[k, m]
    for m in range(M):
        for a in range(Ne):
            yield "ce", -1, -1, m, a, ch.h_ce[m, a]
    for k in range(K):
        for m in range(M):
            for a in range(Ne):
                yield "ve", k, -1, m, a, ch.h_ve[k, m, a]


def save_channels_csv(ch: ChannelRealization, path) -> None:
    """Write every coefficient with full double precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_COLUMNS)
        for link, k, k2, m, a, z in _rows(ch):
            writer.writerow([link, k, k2, m, a, repr(float(z.real)), repr(float(z.imag))])


def load_channels_csv(path) -> ChannelRealization:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != _COLUMNS:
            raise ValueError(f"{path}: expected columns {_COLUMNS}")
        rows = list(reader)
    get = lambda r, c: int(r[c])  # noqa: E731
    K = 1 + max(get(r, "k") for r in rows if r["link_type"] == "g")
    M = 1 + max(get(r, "m") for r in rows if r["link_type"] == "g")
    Ne = 1 + max(get(r, "antenna") for r in rows if r["link_type"] == "ce")
    g = np.zeros((K, M), complex)
    h_vv = np.zeros((K, K, M), complex)
    h_cv = np.zeros((K, M), complex)
    h_ce = np.zeros((M, Ne), complex)
    h_ve = np.zeros((K, M, Ne), complex)
    for r in rows:
        z = complex(float(r["re"]), float(r["im"]))
        k, k2, m, a = (get(r, c) for c in ("k", "k2", "m", "antenna"))
        link = r["link_type"]
        if link == "g":
            g[k, m] = z
        elif link == "vv":
            h_vv[k, k2, m] = z
        elif link == "cv":
            h_cv[k, m] = z
        elif link == "ce":
            h_ce[m, a] = z
        elif link == "ve":
            h_ve[k, m, a] = z
        else:
            raise ValueError(f"{path}: unknown link_type {link!r}")
    return ChannelRealization(g, h_vv, h_cv, h_ce, h_ve)


def channel_digest(ch: ChannelRealization) -> str:
    """SHA-256 over the raw coefficient bytes, for cross-method sharing checks."""
    h = hashlib.sha256()
    for name in ("g", "h_vv", "h_cv", "h_ce", "h_ve"):
        h.update(np.ascontiguousarray(getattr(ch, name)).tobytes())
    return h.hexdigest()
