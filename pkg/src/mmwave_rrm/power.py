"""Power distribution among the UEs co-scheduled on a PRB.

Every solver works on one PRB budget ``P_BS / (Q N_F)``. The batched
functions (``*_batch``) take a leading instance axis and are what the offline
planner uses; the scalar wrappers return :class:`PdSolution`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .beamforming import PrecodedChannels
from .link import RateApprox

LN2 = np.log(2.0)
#: bisection iterations for the water level before the exact active-set refinement
_BISECT_ITERS = 100


@dataclass(frozen=True)
class PdSolution:
    powers: np.ndarray
    dual_level: float
    objective: float
    history: list = field(default_factory=list, compare=False, repr=False)


def capped_waterfill_batch(gains, weights, budget, offset, caps=None):
    """Weighted water-filling with optional per-user caps, solved row by row.

    Each row maximises ``sum_u w_u log2(1 + g_u p_u / offset)`` over
    ``0 <= p_u <= cap_u`` and ``sum p <= budget``. The solution is
    ``p_u = clip(w_u * mu - offset / g_u, 0, cap_u)``; returns ``(powers, mu)``
    with ``mu = inf`` for rows where all caps fit in the budget.
    """
    g = np.atleast_2d(np.asarray(gains, dtype=float))
    w = np.broadcast_to(np.asarray(weights, dtype=float), g.shape)
    nb = g.shape[0]
    budget = np.broadcast_to(np.asarray(budget, dtype=float), (nb,))
    offset = np.broadcast_to(np.asarray(offset, dtype=float), (nb,))[:, None]
    valid = (g > 0) & (w > 0)
    with np.errstate(divide="ignore"):
        floor = np.where(valid, offset / np.where(valid, g, 1.0), np.inf)
    cap = np.full(g.shape, np.inf) if caps is None else np.asarray(caps, dtype=float)
    cap = np.where(valid, cap, 0.0)

    def alloc(mu):
        return np.where(valid, np.clip(w * mu[:, None] - floor, 0.0, cap), 0.0)

    powers = np.zeros_like(g)
    mu_out = np.zeros(nb)
    all_caps = cap.sum(axis=1) <= budget
    powers[all_caps] = cap[all_caps]
    mu_out[all_caps] = np.inf

    todo = ~all_caps & valid.any(axis=1)
    if todo.any():
        gw, ww = np.where(valid, floor, 0.0), np.where(valid, w, 1.0)
        lo = np.zeros(nb)
        hi = np.where(valid, (budget[:, None] + gw) / ww, 0.0).max(axis=1)
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            over = alloc(mid).sum(axis=1) > budget
            hi = np.where(over, mid, hi)
            lo = np.where(over, lo, mid)
        mu = 0.5 * (lo + hi)
        # exact level from the active set found by bisection
        p = alloc(mu)
        active = valid & (p > 0) & (p < cap)
        capped = valid & (p >= cap)
        num = budget - np.where(capped, cap, 0.0).sum(axis=1) + np.where(active, gw, 0.0).sum(axis=1)
        den = np.where(active, w, 0.0).sum(axis=1)
        exact = np.where(den > 0, num / np.where(den > 0, den, 1.0), mu)
        p_exact = alloc(exact)
        ok = np.abs(p_exact.sum(axis=1) - budget) <= 1e-10 * budget
        mu = np.where(ok, exact, mu)
        p = alloc(mu)
        total = p.sum(axis=1)
        scale = np.where(total > budget, budget / np.maximum(total, 1e-300), 1.0)
        powers[todo] = (p * scale[:, None])[todo]
        mu_out[todo] = mu[todo]
    return powers, mu_out


def _dual(mu: float) -> float:
    return 0.0 if not np.isfinite(mu) else (np.inf if mu == 0 else 1.0 / mu)


def waterfill(gains, weights, budget: float, noise: float) -> PdSolution:
    """Maximise ``sum_u w_u log2(1 + g_u p_u / noise)`` under ``sum p <= budget``."""
    g = np.asarray(gains, dtype=float)
    w = np.asarray(weights, dtype=float)
    p, mu = capped_waterfill_batch(g[None], w[None], budget, noise)
    p = p[0]
    obj = float(np.sum(w * np.log2(1.0 + g * p / noise)))
    return PdSolution(powers=p, dual_level=_dual(mu[0]), objective=obj)


def iawf_gains(gains, interference, noise: float) -> np.ndarray:
    """Gains down-weighted by ``noise / (I + noise)``."""
    return noise / (np.asarray(interference, dtype=float) + noise) * np.asarray(gains, dtype=float)


def iawf(gains, weights, budget: float, noise: float, interference) -> PdSolution:
    """Interference-aware water-filling: water-fill on interference-weighted gains."""
    return waterfill(iawf_gains(gains, interference, noise), weights, budget, noise)


def estimate_interference(g_slice: np.ndarray, powers, beams, ue: int | None = None):
    """Interference at each UE from every other UE not sharing its preferred BS beam.

    ``g_slice[n, u]`` is the effective channel from UE n's beam to UE u on one
    RBL; ``powers`` are the all-UE water-filling powers.
    """
    b = np.asarray(beams)
    mask = b[:, None] != b[None, :]
    interf = (np.abs(g_slice) ** 2 * np.asarray(powers, dtype=float)[:, None] * mask).sum(axis=0)
    return interf if ue is None else float(interf[ue])


def approx_objective(sinr, weights, ap: RateApprox):
    se = np.minimum(ap.a * np.log2(1.0 + np.asarray(sinr) / ap.b), ap.s_max)
    return np.sum(np.asarray(weights) * se, axis=-1)


def p1_zf_batch(gains, weights, budget, noise: float, ap: RateApprox):
    """Capped water-filling for interference-free sets; returns ``(powers, mu)``."""
    g = np.atleast_2d(np.asarray(gains, dtype=float))
    off = ap.b * noise
    with np.errstate(divide="ignore", over="ignore"):
        caps = np.where(g > 0, off * np.expm1(np.log(2.0) * ap.s_max / ap.a) / np.where(g > 0, g, 1.0), 0.0)
    return capped_waterfill_batch(g, weights, budget, off, caps)


def solve_p1_zf(gains, weights, budget: float, noise: float, ap: RateApprox) -> PdSolution:
    """Weighted sum of capped log rates under a power budget (exact).

    Maximises ``sum_u w_u min(a log2(1 + g_u p_u / (b noise)), s_max)``. Power
    beyond a UE's saturation point is never allocated, so slack is left when
    every UE can reach ``s_max``.
    """
    g = np.asarray(gains, dtype=float)
    w = np.asarray(weights, dtype=float)
    p, mu = p1_zf_batch(g[None], w[None], budget, noise, ap)
    p = p[0]
    obj = float(approx_objective(g * p / noise, w, ap))
    return PdSolution(powers=p, dual_level=_dual(mu[0]), objective=obj)


# ---------------------------------------------------------------------------
# local search without digital precoding

def _sinr_batch(h2, x, noise):
    rx = h2 * x[..., :, None]
    sig = np.diagonal(rx, axis1=-2, axis2=-1)
    return sig / (rx.sum(axis=-2) - sig + noise[..., None])


def _objective(h2, x, w, noise, ap):
    return approx_objective(_sinr_batch(h2, x, noise), w, ap)


def _gradient(h2, x, w, noise, ap):
    rx = h2 * x[..., :, None]
    diag = np.diagonal(h2, axis1=-2, axis2=-1)
    sig = diag * x
    denom = rx.sum(axis=-2) - sig + noise[..., None]
    gam = sig / denom
    live = ap.a * np.log2(1.0 + gam / ap.b) < ap.s_max
    coef = np.where(live, w * ap.a / (LN2 * (ap.b + gam)), 0.0)
    cross = coef * gam / denom
    off = h2 * (1.0 - np.eye(h2.shape[-1]))
    return coef * diag / denom - np.einsum("...ku,...u->...k", off, cross)


def project_capped_simplex(x):
    """Euclidean projection of each row onto ``{y >= 0, sum y <= 1}``."""
    y = np.maximum(x, 0.0)
    inside = y.sum(axis=-1) <= 1.0
    if inside.all():
        return y
    u = -np.sort(-x, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    j = np.arange(1, x.shape[-1] + 1)
    cond = u - css / j > 0
    rho = x.shape[-1] - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, (rho - 1)[..., None], axis=-1) / rho[..., None]
    simplex = np.maximum(x - theta, 0.0)
    return np.where(inside[..., None], y, simplex)


def ndbf_local_search_batch(h2, weights, budget, noise: float, ap: RateApprox, init,
                            rtol: float = 1e-7, max_iter: int = 500, record: bool = False):
    """Projected-gradient ascent of the smoothed weighted rate with interference.

    ``h2[..., k, u] = |h_{k,u}|^2``. Works in budget-normalised power. Each step
    starts from ``min(1, 4 * last accepted step)`` and halves until an Armijo
    increase is found, so the objective never decreases. Rows stop on a
    relative change below ``rtol``. Returns ``(powers, objective, history)`` with the objective in
    the caller's weight units.
    """
    h2 = np.asarray(h2, dtype=float)
    nb = h2.shape[0]
    budget = np.broadcast_to(np.asarray(budget, dtype=float), (nb,))
    w = np.asarray(weights, dtype=float)
    wscale = np.maximum(w.max(axis=-1, keepdims=True), 1e-300)
    wn = w / wscale
    nn = noise / budget
    x = project_capped_simplex(np.asarray(init, dtype=float) / budget[:, None])
    f = _objective(h2, x, wn, nn, ap)
    history = [f.copy()] if record else []

    idx = np.arange(nb)                      # rows still running
    hs, ws, ns = h2, wn, nn
    xs, fs = x.copy(), f.copy()
    grad = _gradient(hs, xs, ws, ns, ap)
    step = np.ones(nb)
    for _ in range(max_iter):
        if idx.size == 0:
            break
        t = np.minimum(1.0, 4.0 * step)
        accepted = np.zeros(idx.size, dtype=bool)
        x_new, f_new = xs.copy(), fs.copy()
        for _ in range(60):
            pend = np.flatnonzero(~accepted)
            if pend.size == 0:
                break
            cand = project_capped_simplex(xs[pend] + t[pend, None] * grad[pend])
            fc = _objective(hs[pend], cand, ws[pend], ns[pend], ap)
            gain = np.einsum("bk,bk->b", grad[pend], cand - xs[pend])
            ok = (fc >= fs[pend] + 1e-4 * gain) & (fc >= fs[pend])
            x_new[pend[ok]], f_new[pend[ok]] = cand[ok], fc[ok]
            accepted[pend[ok]] = True
            t[pend[~ok]] *= 0.5
        step = np.where(accepted, t, step)
        rel = np.abs(f_new - fs) <= rtol * np.maximum(np.abs(fs), 1e-12)
        x[idx], f[idx] = x_new, f_new
        if record:
            history.append(f.copy())
        keep = accepted & ~rel
        idx, hs, ws, ns = idx[keep], hs[keep], ws[keep], ns[keep]
        xs, fs, step = x_new[keep], f_new[keep], step[keep]
        grad = _gradient(hs, xs, ws, ns, ap)
    objective = f * wscale[:, 0]
    hist = [h * wscale[:, 0] for h in history]
    return x * budget[:, None], objective, hist


def solve_p1_ndbf(h: PrecodedChannels | np.ndarray, weights, budget: float, noise: float,
                  ap: RateApprox, init: PdSolution | None = None) -> PdSolution:
    """Local optimum of the smoothed weighted rate when streams interfere.

    Starts from the interference-free capped water-filling solution. If the
    equal-power point or a single-stream point scores better than the local
    optimum, the search is restarted from the best of them, so the result
    never falls below any of these baselines.
    """
    hm = h.h if isinstance(h, PrecodedChannels) else np.asarray(h)
    h2 = np.abs(hm) ** 2
    w = np.asarray(weights, dtype=float)
    n = w.size
    if init is None:
        init = solve_p1_zf(np.diag(h2), w, budget, noise, ap)
    p, obj, hist = ndbf_local_search_batch(h2[None], w[None], budget, noise, ap,
                                           init.powers[None], record=True)
    p, obj = p[0], float(obj[0])
    starts = np.vstack([np.full(n, budget / n), budget * np.eye(n)])
    f0 = approx_objective(_sinr_batch(h2[None], starts, np.array(noise)), w[None], ap)
    k = int(np.argmax(f0))
    if f0[k] > obj:
        p2, obj2, hist2 = ndbf_local_search_batch(h2[None], w[None], budget, noise, ap,
                                                  starts[k:k + 1], record=True)
        if obj2[0] > obj:
            p, obj, hist = p2[0], float(obj2[0]), hist2
    return PdSolution(powers=p, dual_level=float("nan"), objective=obj,
                      history=[float(v[0]) for v in hist])
