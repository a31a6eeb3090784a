"""Scenario configuration, V2V interference topology and config-file parsing.

All channel gains in this package are normalised by the receiver noise, so
``noise_power`` defaults to 1.  Large-scale attenuation is not modelled; the
``scale_*`` fields are per-link-class power multipliers (default 1) that a
user can set to emulate path loss.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "InterferenceTopology",
    "build_topology",
    "per_rb_bandwidth",
    "load_config",
    "parse_config_text",
    "apply_overrides",
]


class ConfigError(ValueError):
    """Raised for malformed config files or violated config invariants."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical and network constants for one experiment.

    Powers are in watts, bandwidth in Hz, speed in km/h.
    """

    M: int = 4
    K: int = 4
    Nt: int = 4
    Ne: int = 2
    bandwidth_total: float = 20e6
    cue_power: float = 1.0
    p_max: float = 1.0
    noise_power: float = 1.0
    rician_k: float = 3.0
    speed_kmh: float = 50.0
    coherence_ms: float = 200.0
    v2v_range_m: float = 100.0
    headway_s: float = 5.0
    pairwise_headway_multiplier: float = 1.0
    scale_g: float = 1.0
    scale_vv: float = 1.0
    scale_cv: float = 1.0
    scale_ce: float = 1.0
    scale_ve: float = 1.0
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("M", "K", "Nt", "Ne"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"{name} must be an integer >= 1 (got {value!r})")
        for name in ("bandwidth_total", "cue_power", "p_max", "noise_power"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0 (got {getattr(self, name)!r})")
        for name in ("rician_k", "speed_kmh", "coherence_ms", "v2v_range_m",
                     "headway_s", "pairwise_headway_multiplier", "scale_g",
                     "scale_vv", "scale_cv", "scale_ce", "scale_ve"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ConfigError(f"{name} must be finite and >= 0 (got {value!r})")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed must fit in 64 bits (got {self.seed!r})")

    @property
    def rb_bandwidth(self) -> float:
        return per_rb_bandwidth(self)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = [f"{f.name} = {getattr(self, f.name)!r}" for f in dataclasses.fields(self)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class InterferenceTopology:
    """Which inter-VUE interference links exist.

    Attributes
    ----------
    inter_vue_active : (K, K) bool array
        ``inter_vue_active[k, k2]`` is True when transmitter ``k2`` interferes
        with receiver ``k``.  The diagonal is always False.
    inter_vehicle_distance_m : float
        Distance between neighbouring VUE pairs, speed times headway.
    pair_distance_m : (K, K) float array
        Distance used for each ordered pair's range test.
    """

    inter_vue_active: np.ndarray
    inter_vehicle_distance_m: float
    pair_distance_m: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return self.inter_vue_active.shape[0]


def per_rb_bandwidth(cfg: ScenarioConfig) -> float:
    """Bandwidth of one resource block, ``B / M``."""
    return cfg.bandwidth_total / cfg.M


def build_topology(cfg: ScenarioConfig, multipliers=None) -> InterferenceTopology:
    """Decide which inter-VUE links are within V2V range.

    Every ordered pair ``(k, k2)``, ``k != k2``, is separated by
    ``speed * headway * multiplier`` metres and interferes iff that distance
    does not exceed ``cfg.v2v_range_m``.

    Parameters
    ----------
    cfg : ScenarioConfig
    multipliers : array_like, optional
        Symmetric (K, K) headway multipliers.  Defaults to
        ``cfg.pairwise_headway_multiplier`` for all pairs.
    """
    K = cfg.K
    distance = cfg.speed_kmh / 3.6 * cfg.headway_s
    if multipliers is None:
        mult = np.full((K, K), cfg.pairwise_headway_multiplier, dtype=float)
    else:
        mult = np.asarray(multipliers, dtype=float)
        if mult.shape != (K, K):
            raise ConfigError(f"multipliers must have shape {(K, K)}, got {mult.shape}")
        if not np.allclose(mult, mult.T):
            raise ConfigError("multipliers must be symmetric")
    pair_distance = distance * mult
    np.fill_diagonal(pair_distance, 0.0)
    active = pair_distance <= cfg.v2v_range_m
    np.fill_diagonal(active, False)
    active.setflags(write=False)
    pair_distance.setflags(write=False)
    return InterferenceTopology(active, float(distance), pair_distance)


# ---------------------------------------------------------------------------
# config files: one ``key = value`` per line, ``#`` starts a comment

_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
_INT_FIELDS = {"M", "K", "Nt", "Ne", "seed"}


def _coerce(key: str, raw: str):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    raw = raw.strip()
    try:
        if key in _INT_FIELDS:
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def parse_config_text(text: str) -> dict:
    """Parse config text into a dict of typed field values."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        values[key] = _coerce(key, raw)
    return values


def apply_overrides(values: dict, overrides) -> dict:
    """Apply ``key=value`` strings on top of parsed values."""
    out = dict(values)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, raw = (s.strip() for s in item.split("=", 1))
        out[key] = _coerce(key, raw)
    return out


def load_config(path=None, overrides=None, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Build a validated config from an optional file plus overrides."""
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        values = parse_config_text(text)
    values = apply_overrides(values, overrides)
    base = base if base is not None else ScenarioConfig()
    return dataclasses.replace(base, **values)
