"""Per-user secrecy rate against the number of eavesdropper antennas.

More antennas give the eavesdropper array gain, so the rate falls with Ne.
At 50 km/h the VUE pairs are about 69 m apart and interfere with each other,
so adding pairs lowers the per-user rate; at 100 km/h they are out of range
and the per-user rate barely depends on K.  FISTA-L solves each cell.

    python demos/eavesdropper_sweep.py [n_seeds]
"""

import sys

import numpy as np

from v2v_secrecy import harness

n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 100
spec = harness.ne_sweep_spec(seeds=tuple(range(n_seeds)), out_dir="demo_out/ne_sweep")
rows = harness.run_ne_sweep(spec)

rate = {}
for r in rows:
    rate.setdefault(r.scenario_id, []).append(r.per_user_secrecy_bits_per_s / 1e6)

ne_values = (2, 4, 6, 8)
print("per-user secrecy rate (Mb/s), " + f"{n_seeds} channel draws per point")
print(f"{'':14s}" + "".join(f"Ne={n:<6d}" for n in ne_values))
for v in (50, 100):
    for K in (2, 4, 8):
        vals = [np.mean(rate[f"M4_K{K}_Nt4_Ne{n}_v{v}"]) for n in ne_values]
        print(f"v={v:3d} K={K}    " + "".join(f"{x:<9.2f}" for x in vals))
