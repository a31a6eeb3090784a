"""Closed-form gradient against central differences.

The check is run with a small and a deliberately large step.  With
h = 1e-6 p_max the two agree to about 1e-6 relative; with h = 0.3 p_max
the truncation error of the difference quotient dominates.  Corrupting one
gradient entry by 1% shows up as a relative error of about 1e-2.

    python demos/gradient_check.py
"""

import numpy as np

from v2v_secrecy import harness
from v2v_secrecy.gradient import finite_diff_check, grad_sum_secrecy

cfg = harness.reference_config(seed=1)
topo, ch, w, gains = harness.prepare(cfg)
rng = np.random.default_rng(0)
p = rng.uniform(0.35, 0.65, (cfg.K, cfg.M))

for h in (1e-6, 1e-4, 1e-2, 0.3):
    err = finite_diff_check(p, ch, topo, w, cfg, h=h * cfg.p_max)
    print(f"h = {h:7.0e} p_max   max relative error {err:.2e}")

g = grad_sum_secrecy(p, ch, topo, w, cfg)
g[0, 0] *= 1.01
print(f"corrupted entry        max relative error "
      f"{finite_diff_check(p, ch, topo, w, cfg, h=1e-6, grad=g):.2e}")
