"""Small Monte-Carlo comparison of all schedulers.

Run with ``python3 demos/03_scheme_comparison.py [realizations]``. The default
of 5 drops takes about a minute; the acceptance suite uses 30.
"""
import sys
import time

from mmwave_rrm import ExperimentConfig, run_experiment

Z = int(sys.argv[1]) if len(sys.argv) > 1 else 5
base = ExperimentConfig(num_ues=8, rf_chains=4, num_mbs=20, realizations=Z, seed=42)

print(f"U={base.num_ues} K={base.rf_chains} Z={Z} N_o={base.num_mbs}")
print(f"{'scheme':15s} {'dbf':5s} {'GM-bar':>9s} {'95% CI':>19s} {'ms/MB':>8s}")
for scheme in ("offline-opd", "offline-epd", "heur", "bench"):
    for dbf in ("zf", "none"):
        t0 = time.perf_counter()
        report = run_experiment(base.replace(scheme=scheme, dbf=dbf))
        lo, hi = report.gm_ci95
        print(f"{scheme:15s} {dbf:5s} {report.gm_bar / 1e6:9.1f} "
              f"[{lo / 1e6:7.1f}, {hi / 1e6:7.1f}] {report.runtime_ms[0]:8.1f}")
# GM-bar is the geometric mean over UEs of their average MB throughput
# (Mbit/s), averaged over drops. ZF precoding lifts every scheme; the offline
# planner with optimised power sets the reference the online schemes chase.
