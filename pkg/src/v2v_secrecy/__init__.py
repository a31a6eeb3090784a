"""Secrecy-rate power allocation for V2V links sharing cellular RBs.

A VUE pair reusing a CUE's resource block is overheard by a multi-antenna
eavesdropper.  The package draws Rician channels, evaluates the sum secrecy
rate and maximises it over the per-RB transmit powers with either a
projected-gradient method (FISTA, FISTA-L) or successive convex
approximation with an interior-point inner solver (SCA).
"""

from .channel import ChannelRealization, draw_channels, load_channels_csv, save_channels_csv
from .fista import FistaSettings, SolveTrace, project_box, solve_fista
from .gradient import finite_diff_check, grad_sum_secrecy
from .phy import LinkGains, SecrecyEvaluation, eve_combiner, evaluate, sum_secrecy
from .scenario import ConfigError, ScenarioConfig, build_topology, load_config, per_rb_bandwidth
from .sca import solve_sca

__version__ = "0.1.0"

__all__ = [
    "ChannelRealization", "draw_channels", "load_channels_csv", "save_channels_csv",
    "FistaSettings", "SolveTrace", "project_box", "solve_fista",
    "finite_diff_check", "grad_sum_secrecy",
    "LinkGains", "SecrecyEvaluation", "eve_combiner", "evaluate", "sum_secrecy",
    "ConfigError", "ScenarioConfig", "build_topology", "load_config", "per_rb_bandwidth",
    "solve_sca",
]
