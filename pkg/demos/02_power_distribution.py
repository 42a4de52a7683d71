"""Compare the power-distribution solvers on one three-UE set.

Run with ``python3 demos/02_power_distribution.py``.
"""
import numpy as np

from mmwave_rrm import RateApprox, iawf, solve_p1_ndbf, solve_p1_zf, waterfill

ap = RateApprox.tight(5.5547)
w = np.array([1.0, 2.0, 1.0])       # PF weights
noise, budget = 1.0, 1.0

# Interference-free (post-ZF) gains: water-filling against the capped solver.
g = np.array([400.0, 20.0, 0.5])
wf = waterfill(g, w, budget, noise)
zf = solve_p1_zf(g, w, budget, noise, ap)
cap = ap.saturation_sinr * noise / g
print("gains               ", g)
print("water-filling powers", np.round(wf.powers, 4))
print("capped solver powers", np.round(zf.powers, 4))
print("saturation caps     ", np.round(cap, 4))
# UE 0 saturates the top MCS with a fraction of the budget; the capped solver
# stops there and hands the rest to the others.

# Without DBF the streams interfere: h[k, u] is stream k as heard by UE u.
h = np.sqrt(np.array([[400.0, 8.0, 0.5],
                      [6.0, 20.0, 0.2],
                      [2.0, 0.3, 0.5]]))
nd = solve_p1_ndbf(h, w, budget, noise, ap)
print("\nN-DBF local search  ", np.round(nd.powers, 4), f"after {len(nd.history) - 1} steps")
print("objective trace     ", np.round(nd.history[:: max(1, len(nd.history) // 5)], 3))

# The online heuristic uses a cheaper rule: scale each gain down by the
# interference it expects and water-fill once.
interference = np.array([(h[1, 0] ** 2) * 0.3, (h[0, 1] ** 2) * 0.3, 0.1])
ia = iawf(np.diag(h) ** 2, w, budget, noise, interference)
print("IAWF powers         ", np.round(ia.powers, 4))
