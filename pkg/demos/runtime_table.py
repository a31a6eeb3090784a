"""Average solver runtime on the three table sizes.

Wall time covers the solve call only.  SCA pays for a dense Newton system
per barrier step, so its cost grows much faster with M*K than the
first-order methods, which need one gradient (O(M K^2) here) per step.

    python demos/runtime_table.py [n_seeds]
"""

import sys

from v2v_secrecy import harness

n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 5
spec = harness.runtime_spec(seeds=tuple(range(n_seeds)), out_dir="demo_out/runtime")
rows, ratios = harness.run_runtime_table(spec)

means = {(e["scenario_id"], e["method"]): e for e in harness.summarize(rows)}
print(f"{'scenario':22s} {'SCA':>10s} {'FISTA':>10s} {'FISTA-L':>10s}   SCA/FISTA  SCA/FISTA-L")
for r in ratios:
    sid = r["scenario_id"]
    t = [means[sid, m]["wall_time_s_mean"] for m in ("sca", "fista", "fista-l")]
    print(f"{sid:22s} {t[0]:9.4f}s {t[1]:9.4f}s {t[2]:9.5f}s   {r['sca_over_fista']:9.0f}  "
          f"{r['sca_over_fista_l']:11.0f}")

print("\nmean objective (Mb/s):")
for (sid, method), e in means.items():
    print(f"  {sid:22s} {method:8s} {e['objective_bits_per_s_mean'] / 1e6:8.2f}")
