"""Convergence of the three solvers on one channel draw.

Every method starts from p = p_max / 2 on the same channel realization.
The traces are printed side by side every few iterations and written to
``demo_out/convergence`` for plotting.

    python demos/convergence.py [seed]
"""

import sys
from pathlib import Path

from v2v_secrecy import harness

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
out = Path("demo_out") / "convergence"
out.mkdir(parents=True, exist_ok=True)

for size in (dict(M=4, K=4, Nt=4, Ne=2), dict(M=8, K=8, Nt=8, Ne=4)):
    cfg = harness.reference_config(seed=seed, **size)
    _, _, _, gains = harness.prepare(cfg)
    print(f"\n{harness.scenario_id(cfg)}  (RB bandwidth {gains.W / 1e6:g} MHz)")

    traces = {}
    for method in harness.METHODS:
        _, trace = harness.solve_method(method, gains, cfg)
        traces[method] = trace
        trace.write_csv(out / f"{harness.scenario_id(cfg)}_{method}.csv")

    # SCA and FISTA-L need a handful of iterations, plain FISTA many more
    for method, tr in traces.items():
        obj = tr.objective_per_iter
        picks = sorted({0, 1, 2, 5, 10, 100, len(obj) - 1} & set(range(len(obj))))
        shown = "  ".join(f"[{i}] {obj[i] / 1e6:.2f}" for i in picks)
        print(f"  {method:8s} {tr.iters:5d} iters, {tr.wall_time_s * 1e3:8.2f} ms  {shown}  Mb/s")

    gap = traces["sca"].final_objective / traces["fista"].final_objective - 1
    print(f"  SCA ends {gap:+.2%} above fixed-step FISTA")

print(f"\ntraces in {out}/")
