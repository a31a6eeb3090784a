"""Command-line entry point.

Exit codes: 0 success, 1 solver error or failed check, 2 config/usage error.
Diagnostics go to stderr; data goes to the named output files or, as CSV,
to stdout.  ``V2V_SECRECY_CONFIG`` names a default config file.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import harness
from .channel import draw_channels, load_channels_csv, save_channels_csv
from .fista import NonFiniteObjective
from .gradient import finite_diff_check
from .phy import LinkGains, eve_combiner
from .scenario import ConfigError, build_topology, load_config
from .sca import BarrierDivergence, InfeasibleExpansion, NumericalIllConditioning

log = logging.getLogger("v2v_secrecy")

ENV_CONFIG = "V2V_SECRECY_CONFIG"
SOLVER_ERRORS = (NonFiniteObjective, BarrierDivergence, InfeasibleExpansion,
                 NumericalIllConditioning, FloatingPointError)


def _config(args):
    path = args.config or os.environ.get(ENV_CONFIG)
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    return load_config(path, overrides, base=harness.reference_config())


def _setup(args):
    cfg = _config(args)
    topo = build_topology(cfg)
    if getattr(args, "channels", None):
        ch = load_channels_csv(args.channels)
        if (ch.K, ch.M, ch.Ne) != (cfg.K, cfg.M, cfg.Ne):
            raise ConfigError(f"channel file has K, M, Ne = {(ch.K, ch.M, ch.Ne)}, "
                              f"config says {(cfg.K, cfg.M, cfg.Ne)}")
    else:
        ch = draw_channels(cfg, topo)
    w = eve_combiner(ch, cfg)
    return cfg, topo, ch, w, LinkGains.build(ch, topo, w, cfg)


def cmd_generate_channels(args):
    cfg = _config(args)
    ch = draw_channels(cfg, build_topology(cfg))
    save_channels_csv(ch, args.out)
    log.info("wrote %s", args.out)
    return 0


def cmd_solve(args):
    cfg, _, _, _, gains = _setup(args)
    p, trace = harness.solve_method(args.method, gains, cfg)
    if args.out:
        trace.write_csv(args.out)
    if args.powers_out:
        np.savetxt(args.powers_out, p, delimiter=",", fmt="%.17g")
    print("method,seed,objective_bits_per_s,iterations,status,wall_time_s")
    print(f"{args.method},{cfg.seed},{trace.final_objective!r},{trace.iters},{trace.status},"
          f"{trace.wall_time_s!r}")
    return 0


def cmd_sweep(args):
    base = _config(args)
    kw = dict(base=base, out_dir=args.out, n_jobs=args.jobs)
    if args.seeds is not None:
        kw["seeds"] = tuple(range(args.seeds))
    if args.experiment == "convergence":
        harness.run_convergence(harness.convergence_spec(**kw))
    elif args.experiment == "runtime":
        _, ratios = harness.run_runtime_table(harness.runtime_spec(**kw))
        for r in ratios:
            log.info("%s: SCA/FISTA %.1f, SCA/FISTA-L %.1f", r["scenario_id"],
                     r["sca_over_fista"], r["sca_over_fista_l"])
    else:
        harness.run_ne_sweep(harness.ne_sweep_spec(**kw))
    log.info("results in %s", args.out)
    return 0


def cmd_gridcheck(args):
    cfg, _, _, _, gains = _setup(args)
    if cfg.K * cfg.M > 6:
        raise ConfigError(f"grid check needs K*M <= 6 (got {cfg.K * cfg.M})")
    grid_best, _ = harness.grid_search(gains, cfg.p_max, args.points)
    print("method,best_of_restarts,grid_objective,ratio")
    ok = True
    for method in args.methods:
        best, _ = harness.best_of_restarts(method, gains, cfg, args.restarts, seed=cfg.seed)
        ratio = best / grid_best if grid_best > 0 else float("inf")
        ok &= ratio >= args.threshold
        print(f"{method},{best!r},{grid_best!r},{ratio!r}")
    return 0 if ok else 1


def cmd_gradcheck(args):
    if not 0 < args.h < 0.45:
        raise ConfigError("--h must lie in (0, 0.45) so that p +- h stays in the box")
    cfg, topo, ch, w, _ = _setup(args)
    rng = np.random.default_rng([cfg.seed, 4242])
    lo, hi = max(0.05, 1.01 * args.h), min(0.95, 1.0 - 1.01 * args.h)
    worst = 0.0
    for _ in range(args.points):
        p = rng.uniform(lo, hi, size=(cfg.K, cfg.M)) * cfg.p_max
        err = finite_diff_check(p, ch, topo, w, cfg, h=args.h * cfg.p_max)
        worst = max(worst, err) if np.isfinite(err) else np.inf
    print("points,max_relative_error")
    print(f"{args.points},{worst!r}")
    return 0 if worst <= args.tol else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="v2v-secrecy", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", help=f"config file (default: ${ENV_CONFIG})")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field")
        if seed:
            p.add_argument("--seed", type=int)

    p = sub.add_parser("generate-channels", help="draw one channel realization to CSV")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate_channels)

    p = sub.add_parser("solve", help="run one solver and write its trace")
    common(p)
    p.add_argument("--method", choices=harness.METHODS, required=True)
    p.add_argument("--channels", help="channel CSV to use instead of drawing")
    p.add_argument("--out", help="trace CSV")
    p.add_argument("--powers-out", help="CSV of the final (K, M) powers")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run one of the experiments")
    common(p, seed=False)
    p.add_argument("--experiment", choices=("convergence", "runtime", "ne"), required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seeds", type=int, help="number of seeds per cell")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gridcheck", help="compare solvers with exhaustive grid search")
    common(p)
    p.add_argument("--channels")
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--threshold", type=float, default=0.98)
    p.add_argument("--methods", nargs="+", choices=harness.METHODS, default=["sca", "fista-l"])
    p.set_defaults(func=cmd_gridcheck)

    p = sub.add_parser("gradcheck", help="closed-form gradient vs central differences")
    common(p)
    p.add_argument("--channels")
    p.add_argument("--points", type=int, default=10)
    p.add_argument("--h", type=float, default=1e-6, help="step as a fraction of p_max")
    p.add_argument("--tol", type=float, default=1e-5)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SOLVER_ERRORS as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
