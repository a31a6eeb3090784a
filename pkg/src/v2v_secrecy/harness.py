"""Experiment drivers: convergence traces, runtime table, eavesdropper sweep.

Every driver writes plain CSV.  Within a (scenario, seed) cell all methods
share one channel realization; wall time covers the solver call only.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .channel import channel_digest, draw_channels
from .fista import FistaSettings, solve_fista
from .phy import LinkGains, eve_combiner
from .scenario import ScenarioConfig, build_topology
from .sca import solve_sca

__all__ = [
    "METHODS",
    "reference_config",
    "ExperimentSpec",
    "ResultRow",
    "scenario_id",
    "prepare",
    "solve_method",
    "run_cell",
    "run_convergence",
    "run_runtime_table",
    "run_ne_sweep",
    "convergence_spec",
    "runtime_spec",
    "ne_sweep_spec",
    "grid_search",
    "best_of_restarts",
    "write_rows",
    "summarize",
]

log = logging.getLogger(__name__)

METHODS = ("sca", "fista", "fista-l")


def reference_config(**overrides) -> ScenarioConfig:
    """Scenario used by the experiments.

    Gains are noise-normalised: the desired V2V link is 10 dB above the
    other links and the wiretap links are 10 dB below them.  Everything else
    keeps the ``ScenarioConfig`` defaults (M=K=4, B=20 MHz, 1 W powers).
    """
    values = dict(scale_g=10.0, scale_ve=0.1)
    values.update(overrides)
    return ScenarioConfig(**values)


def scenario_id(cfg: ScenarioConfig) -> str:
    return f"M{cfg.M}_K{cfg.K}_Nt{cfg.Nt}_Ne{cfg.Ne}_v{cfg.speed_kmh:g}"


@dataclass
class ResultRow:
    scenario_id: str
    method: str
    seed: int
    objective_bits_per_s: float
    per_user_secrecy_bits_per_s: float
    iterations: int
    wall_time_s: float


@dataclass
class ExperimentSpec:
    """A grid of scenarios crossed with seeds and methods.

    Each entry of ``scenarios`` holds field overrides (e.g. ``M``, ``K``,
    ``Nt``, ``Ne``, ``speed_kmh``) applied on top of ``base``.
    """

    scenarios: list
    methods: tuple = METHODS
    seeds: tuple = (0, 1, 2)
    out_dir: Path | None = None
    base: ScenarioConfig = field(default_factory=reference_config)
    n_jobs: int = 1

    def __post_init__(self):
        if not self.scenarios:
            raise ValueError("scenario grid is empty")
        if len(tuple(self.seeds)) < 1:
            raise ValueError("need at least one seed")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")
        self.seeds = tuple(int(s) for s in self.seeds)
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir)

    def configs(self):
        return [self.base.replace(**sc) for sc in self.scenarios]


def prepare(cfg: ScenarioConfig, seed: int | None = None):
    """Topology, channels, combiner and gains for one cell."""
    topo = build_topology(cfg)
    ch = draw_channels(cfg, topo, seed)
    w = eve_combiner(ch, cfg)
    return topo, ch, w, LinkGains.build(ch, topo, w, cfg)


def default_p0(cfg: ScenarioConfig) -> np.ndarray:
    return np.full((cfg.K, cfg.M), 0.5 * cfg.p_max)


def solve_method(method: str, gains: LinkGains, cfg: ScenarioConfig, p0=None, **options):
    """Run one solver on precomputed gains; returns ``(p, trace)``."""
    p0 = default_p0(cfg) if p0 is None else p0
    if method == "sca":
        return solve_sca(p0, gains=gains, p_max=cfg.p_max, **options)
    if method in ("fista", "fista-l"):
        settings = FistaSettings(use_linesearch=(method == "fista-l"), **options)
        return solve_fista(p0, gains=gains, p_max=cfg.p_max, settings=settings)
    raise ValueError(f"unknown method {method!r}")


def run_cell(cfg: ScenarioConfig, seed: int, methods=METHODS):
    """Solve one channel realization with every method.

    Returns a dict with the channel digest and, per method, ``(p, trace)`` or
    the exception the solver raised.
    """
    _, ch, _, gains = prepare(cfg, seed)
    out = {"digest": channel_digest(ch), "solutions": {}}
    for method in methods:
        try:
            out["solutions"][method] = solve_method(method, gains, cfg)
        except Exception as exc:  # keep the sweep going
            log.warning("%s seed %d %s failed: %s", scenario_id(cfg), seed, method, exc)
            out["solutions"][method] = exc
    return out


def _cell_job(args):
    cfg, seed, methods = args
    return run_cell(cfg, seed, methods)


def _run_grid(spec: ExperimentSpec):
    jobs = [(cfg, seed, spec.methods) for cfg in spec.configs() for seed in spec.seeds]
    if spec.n_jobs > 1:
        with ProcessPoolExecutor(spec.n_jobs) as pool:
            results = list(pool.map(_cell_job, jobs))
    else:
        results = [_cell_job(j) for j in jobs]
    return [(cfg, seed, res) for (cfg, seed, _), res in zip(jobs, results)]


def _rows_and_errors(cells):
    rows, errors = [], []
    for cfg, seed, res in cells:
        for method, sol in res["solutions"].items():
            if isinstance(sol, Exception):
                errors.append((scenario_id(cfg), method, seed, f"{type(sol).__name__}: {sol}"))
                continue
            _, trace = sol
            rows.append(ResultRow(scenario_id(cfg), method, seed, trace.final_objective,
                                  trace.final_objective / cfg.K, trace.iters, trace.wall_time_s))
    return rows, errors


def write_rows(rows, path) -> None:
    names = [f.name for f in fields(ResultRow)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in asdict(row).values()])


def summarize(rows):
    """Per (scenario, method) means and standard deviations."""
    groups = {}
    for r in rows:
        groups.setdefault((r.scenario_id, r.method), []).append(r)
    out = []
    for (sid, method), rs in groups.items():
        entry = {"scenario_id": sid, "method": method, "n": len(rs)}
        for name in ("objective_bits_per_s", "per_user_secrecy_bits_per_s", "iterations",
                     "wall_time_s"):
            vals = np.array([getattr(r, name) for r in rs], dtype=float)
            entry[f"{name}_mean"] = float(np.mean(vals))
            entry[f"{name}_std"] = float(np.std(vals))
        out.append(entry)
    return out


def _write_dicts(entries, path):
    if not entries:
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(entries[0]))
        for e in entries:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in e.values()])


def _write_outputs(spec, rows, errors):
    if spec.out_dir is None:
        return
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    write_rows(rows, spec.out_dir / "results.csv")
    _write_dicts(summarize(rows), spec.out_dir / "summary.csv")
    if errors:
        with open(spec.out_dir / "errors.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scenario_id", "method", "seed", "error"])
            writer.writerows(errors)


def run_convergence(spec: ExperimentSpec):
    """Full solver traces for every scenario, seed and method.

    Returns ``(rows, traces)`` where ``traces`` maps
    ``(scenario_id, method, seed)`` to the ``SolveTrace``.  With an output
    directory, each trace goes to ``trace_<scenario>_<method>_seed<N>.csv``.
    """
    cells = _run_grid(spec)
    rows, errors = _rows_and_errors(cells)
    traces = {}
    for cfg, seed, res in cells:
        for method, sol in res["solutions"].items():
            if not isinstance(sol, Exception):
                traces[scenario_id(cfg), method, seed] = sol[1]
    if spec.out_dir is not None:
        spec.out_dir.mkdir(parents=True, exist_ok=True)
        for (sid, method, seed), trace in traces.items():
            trace.write_csv(spec.out_dir / f"trace_{sid}_{method}_seed{seed}.csv")
        with open(spec.out_dir / "channels.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scenario_id", "seed", "channel_sha256"])
            for cfg, seed, res in cells:
                writer.writerow([scenario_id(cfg), seed, res["digest"]])
    _write_outputs(spec, rows, errors)
    return rows, traces


def speedups(rows):
    """Mean-runtime ratios SCA/FISTA and SCA/FISTA-L per scenario."""
    out = []
    means = {(e["scenario_id"], e["method"]): e["wall_time_s_mean"] for e in summarize(rows)}
    for sid in dict.fromkeys(r.scenario_id for r in rows):
        sca = means.get((sid, "sca"))
        entry = {"scenario_id": sid}
        for m in ("fista", "fista-l"):
            other = means.get((sid, m))
            entry[f"sca_over_{m.replace('-', '_')}"] = (
                sca / other if sca is not None and other else float("nan"))
        out.append(entry)
    return out


def run_runtime_table(spec: ExperimentSpec):
    """Average wall time per method and scenario, plus speedup ratios.

    Returns ``(rows, speedup_entries)``; writes ``speedup.csv`` next to the
    results when an output directory is set.
    """
    rows, errors = _rows_and_errors(_run_grid(spec))
    _write_outputs(spec, rows, errors)
    ratios = speedups(rows)
    if spec.out_dir is not None:
        _write_dicts(ratios, spec.out_dir / "speedup.csv")
    return rows, ratios


def run_ne_sweep(spec: ExperimentSpec):
    """Per-user secrecy rate for every (Ne, K, speed) cell, averaged over seeds."""
    rows, errors = _rows_and_errors(_run_grid(spec))
    _write_outputs(spec, rows, errors)
    return rows


def convergence_spec(seeds=(0, 1, 2), **kw) -> ExperimentSpec:
    scen = [dict(M=4, K=4, Nt=4, Ne=2), dict(M=8, K=8, Nt=8, Ne=4)]
    return ExperimentSpec(scen, seeds=seeds, **kw)


def runtime_spec(seeds=tuple(range(5)), **kw) -> ExperimentSpec:
    scen = [dict(M=4, K=4, Nt=4, Ne=2), dict(M=6, K=6, Nt=6, Ne=3), dict(M=8, K=8, Nt=8, Ne=4)]
    return ExperimentSpec(scen, seeds=seeds, **kw)


def ne_sweep_spec(seeds=tuple(range(100)), ne=(2, 4, 6, 8), users=(2, 4, 8),
                  speeds=(50.0, 100.0), methods=("fista-l",), **kw) -> ExperimentSpec:
    scen = [dict(M=4, Nt=4, K=k, Ne=n, speed_kmh=v) for v in speeds for k in users for n in ne]
    return ExperimentSpec(scen, methods=methods, seeds=seeds, **kw)


# ---------------------------------------------------------------------------
# global-quality oracles

def grid_search(gains: LinkGains, p_max: float, points: int = 20, chunk: int = 20000):
    """Exhaustive search over a uniform grid of the power box.

    Each power takes ``points`` equispaced values from the positivity floor
    ``1e-12 * p_max`` to ``p_max``.  Returns ``(best_objective, best_p)``.
    """
    K, M = gains.shape
    levels = np.linspace(1e-12 * p_max, p_max, points)
    n = K * M
    total = points ** n
    best, best_idx = -np.inf, 0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        digits = (idx[:, None] // points ** np.arange(n - 1, -1, -1)) % points
        vals = gains.objective_batch(levels[digits].reshape(-1, K, M))
        j = int(np.argmax(vals))
        if vals[j] > best:
            best, best_idx = float(vals[j]), int(idx[j])
    digits = (best_idx // points ** np.arange(n - 1, -1, -1)) % points
    return best, levels[digits].reshape(K, M)


def best_of_restarts(method: str, gains: LinkGains, cfg: ScenarioConfig, restarts: int = 5,
                     seed: int = 0):
    """Best objective over ``restarts`` starts: ``p_max/2`` then uniform draws."""
    rng = np.random.default_rng([int(seed), 7919])
    best_p, best_val = None, -np.inf
    for r in range(restarts):
        if r == 0:
            p0 = default_p0(cfg)
        else:
            p0 = rng.uniform(1e-12 * cfg.p_max, cfg.p_max, size=(cfg.K, cfg.M))
        p, trace = solve_method(method, gains, cfg, p0=p0)
        if trace.final_objective > best_val:
            best_p, best_val = p, trace.final_objective
    return best_val, best_p
