"""Walk through one network drop and one scheduling decision.

Run with ``python3 demos/01_one_drop.py``.
"""
import numpy as np

from mmwave_rrm import (ExperimentConfig, McsTable, OfflinePlanner, PfState, beam_align,
                        build_codebook, draw_realization, effective_channels, enumerate_sets,
                        pf_update)

cfg = ExperimentConfig(num_ues=6, rf_chains=3)
tbl = McsTable.default(cfg.rbl_bandwidth_hz)

# Drop six UEs in the sector and sweep the codebooks once.
real = draw_realization(seed=5, num_ues=cfg.num_ues)
ba = beam_align(real, build_codebook(128, cfg.bs_beams), build_codebook(16, cfg.ue_beams), 1)
print("path loss (dB):     ", np.round(real.pathloss_db, 1))
print("preferred BS beams: ", ba.bs_beams[:, 0])
print("distinct beams B_p: ", ba.preferred_beams)

# Effective channels g[q, n, j, u, i] are fixed for the whole drop.
eff = effective_channels(real, ba)
snr_db = 10 * np.log10(np.abs(eff.signal()) ** 2 * cfg.budget.power_w / cfg.budget.noise_w)
print("band-centre SNR (dB):", np.round(snr_db[cfg.num_rbls // 2], 1))

# With K=3 RF chains the planner picks three of the preferred beams for the
# MB and, per RBL, one UE set that fits inside them.
space = enumerate_sets(ba, cfg.rf_chains)
print(f"{len(space.beam_sets)} beam sets, {len(space.ue_sets)} UE sets")

planner = OfflinePlanner(space, eff, tbl, cfg.budget, "zf")
pf = PfState.initial(cfg.num_ues)
for pd in ("epd", "opd"):
    plan = planner.plan(pf, pd, with_upper=pd == "opd")
    print(f"\n{pd.upper()}: beam set {plan.beam_set}, objective {plan.objective:.4g}")
    if plan.upper_objective is not None:
        print(f"      upper bound {plan.upper_objective:.4g}")
    for q in (0, cfg.num_rbls // 2, cfg.num_rbls - 1):
        print(f"  RBL {q:2d}: UEs {[u for u, _ in plan.ue_sets[q]]}, MCS {plan.mcs[q]}, "
              f"power {np.round(plan.powers[q] * 1e3, 2)} mW")
    print("  MB throughput (Mbit/s):", np.round(plan.throughput / 1e6, 1))

# Everyone saturates the top MCS here, so power optimisation has nothing to
# gain in this MB. Fairness does the work over time: served UEs' averages rise
# and the next MBs turn to the others.
for mb in range(1, 5):
    pf = pf_update(pf, plan.throughput)
    plan = planner.plan(pf, "opd")
    print(f"MB {mb}: beam set {plan.beam_set}, served {sorted({u for z in plan.ue_sets for u, _ in z})}")
