"""Offline joint beam/UE selection, power distribution and MCS planning per MB.

With one beam set per MB and one UE set per RBL, the relaxed problem
decomposes: the objective is linear in the time/frequency fractions, the
fractions of different (beam set, RBL) cells are independent, and the beam
set fractions live on a simplex. The optimum therefore picks

    l* = argmax_l sum_q max_{z in M_l} score(z, q)

and the best UE set of l* on each RBL, which is an integral schedule. Scores
are weighted MCS rates of a UE set on an RBL under equal (EPD) or optimised
(OPD) power distribution.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .beamforming import BeamAssignment, EffectiveChannelTensor, zf_gains_batch
from .errors import CapacityError
from .link import McsTable, RateApprox, mcs_from_rate, rate_approx, rate_discrete
from .plan import Dbf, MbPlan, PfState, PrbBudget
from .power import ndbf_local_search_batch, p1_zf_batch

DEFAULT_CAPACITY = 10 ** 6


@dataclass(frozen=True)
class SetSpace:
    """All beam sets of size L and all UE sets compatible with some of them.

    ``ue_sets[k]`` is a tuple of (ue, pair) members sorted by UE; the UE sets of
    beam set ``i`` are those with ``member_mask[i, k]``.
    """

    preferred: tuple
    L: int
    beam_sets: list
    ue_sets: list
    set_beams: list
    member_mask: np.ndarray

    def ue_sets_for(self, beam_set_index: int) -> list:
        return [self.ue_sets[k] for k in np.flatnonzero(self.member_mask[beam_set_index])]


def enumerate_sets(ba: BeamAssignment, K: int, M: int | None = None,
                   capacity: int = DEFAULT_CAPACITY) -> SetSpace:
    """Enumerate beam sets and UE sets using the first ``M`` pairs of every UE."""
    if K < 1:
        raise ValueError("K must be >= 1")
    M = ba.num_pairs if M is None else M
    if not 1 <= M <= ba.num_pairs:
        raise ValueError(f"M must lie in [1, {ba.num_pairs}]")
    beams = ba.bs_beams[:, :M]
    preferred = tuple(int(b) for b in np.unique(beams))
    if not preferred:
        raise ValueError("no preferred beams")
    L = min(K, len(preferred))
    n_l = comb(len(preferred), L)
    if n_l > capacity:
        raise CapacityError(f"{n_l} beam sets (|B_p|={len(preferred)}, L={L}) exceed cap {capacity}")

    U = ba.num_ues
    found = []

    def grow(u, members, used):
        if u == U:
            if members:
                found.append(tuple(members))
                if len(found) > capacity:
                    raise CapacityError(f"more than {capacity} UE sets (U={U}, M={M}, L={L})")
            return
        grow(u + 1, members, used)
        if len(members) < L:
            for j in range(M):
                b = int(beams[u, j])
                if b not in used:
                    grow(u + 1, members + [(u, j)], used | {b})

    grow(0, [], frozenset())
    keyed = sorted(found, key=lambda z: (sorted(int(beams[u, j]) for u, j in z), z))
    set_beams = [tuple(sorted(int(beams[u, j]) for u, j in z)) for z in keyed]

    pos = {b: i for i, b in enumerate(preferred)}
    beam_sets = list(itertools.combinations(preferred, L))
    lmat = np.zeros((len(beam_sets), len(preferred)), dtype=np.int32)
    for i, ls in enumerate(beam_sets):
        lmat[i, [pos[b] for b in ls]] = 1
    zmat = np.zeros((len(keyed), len(preferred)), dtype=np.int32)
    for k, sb in enumerate(set_beams):
        zmat[k, [pos[b] for b in sb]] = 1
    mask = (zmat @ (1 - lmat).T == 0).T
    widest = int(mask.sum(axis=1).max())
    if n_l * widest > capacity:
        raise CapacityError(f"{n_l} beam sets x {widest} UE sets = {n_l * widest} exceeds cap {capacity}")
    return SetSpace(preferred, L, beam_sets, keyed, set_beams, mask)


@dataclass
class _SizeGroup:
    index: np.ndarray      # positions in SetSpace.ue_sets
    ues: np.ndarray        # (n, s)
    g: np.ndarray          # (n, Q, s, s) rows = receivers, cols = streams
    h2: np.ndarray         # (n, Q, s, s) |h[k, u]|^2 without DBF
    zf_gain: np.ndarray    # (n, Q, s)
    epd_rates: np.ndarray  # (n, Q, s) bit/s


@dataclass
class _Scores:
    weighted: np.ndarray        # (n_z, Q)
    powers: list                # per group (n, Q, s)
    rates: list                 # per group (n, Q, s)
    upper: np.ndarray | None    # (n_z, Q)


class OfflinePlanner:
    """Scores every (UE set, RBL) cell of one realisation and solves each MB.

    Per-realisation quantities (set channels, ZF gains, EPD rates) are computed
    once and reused for every MB; only the PF weights change between MBs.
    """

    def __init__(self, space: SetSpace, eff: EffectiveChannelTensor, tbl: McsTable,
                 budget: PrbBudget, dbf: Dbf | str = Dbf.ZF):
        self.space = space
        self.eff = eff
        self.tbl = tbl
        self.budget = budget
        self.dbf = Dbf(dbf)
        self.tight = RateApprox.tight(tbl.s_max)
        self.upper = RateApprox.upper(tbl.s_max)
        self.groups = self._build_groups()
        self._where = {int(k): (gi, row) for gi, grp in enumerate(self.groups)
                       for row, k in enumerate(grp.index)}

    def _build_groups(self) -> list:
        g = self.eff.g
        ba = self.eff.assignment
        codebook = ba.bs_codebook.vectors
        sizes = np.array([len(z) for z in self.space.ue_sets])
        p, noise = self.budget.power_w, self.budget.noise_w
        groups = []
        for s in np.unique(sizes):
            idx = np.flatnonzero(sizes == s)
            ue = np.array([[m[0] for m in self.space.ue_sets[k]] for k in idx])
            pr = np.array([[m[1] for m in self.space.ue_sets[k]] for k in idx])
            gs = g[:, ue[:, None, :], pr[:, None, :], ue[:, :, None], pr[:, :, None]]
            gs = np.moveaxis(gs, 0, 1)                                    # (n, Q, s, s)
            h2 = np.swapaxes(np.abs(gs) ** 2, -1, -2)
            w = codebook[ba.bs_beams[ue, pr]]                              # (n, s, Nb)
            gram = np.einsum("nkb,njb->nkj", w.conj(), w)[:, None]
            zf_gain, _ = zf_gains_batch(gs, np.broadcast_to(gram, gs.shape))
            pe = np.full(gs.shape[:-1], p / s)
            if self.dbf is Dbf.ZF:
                sinr = zf_gain * pe / noise
            else:
                sinr = _sinr(h2, pe, noise)
            groups.append(_SizeGroup(idx, ue, gs, h2, zf_gain, rate_discrete(sinr, self.tbl)))
        return groups

    # -- per-cell scores --------------------------------------------------

    def scores(self, pf: PfState, pd: str = "opd", upper: bool = False) -> _Scores:
        """Weighted discrete-rate score of every (UE set, RBL) cell.

        ``pd`` is ``"epd"`` or ``"opd"``. For OPD the feasible powers are the
        better (under the discrete rates) of the optimised and the equal split.
        """
        w_all = pf.weights
        n_z, Q = len(self.space.ue_sets), self.eff.num_rbls
        if pd not in ("epd", "opd"):
            raise ValueError(f"unknown power distribution {pd!r}")
        weighted = np.zeros((n_z, Q))
        ub = np.zeros((n_z, Q)) if upper else None
        powers, rates, ws = [], [], []
        p, noise, br = self.budget.power_w, self.budget.noise_w, self.tbl.rbl_bandwidth_hz
        for grp in self.groups:
            n, s = grp.ues.shape
            w = np.broadcast_to(w_all[grp.ues][:, None, :], (n, Q, s))
            ws.append(w)
            weighted[grp.index] = (grp.epd_rates * w).sum(axis=-1)
            powers.append(np.full((n, Q, s), p / s))
            rates.append(grp.epd_rates)
        if pd == "opd":
            live = self._contenders(weighted, ws)
            for gi, grp in enumerate(self.groups):
                if grp.ues.shape[1] == 1:
                    continue  # a lone UE already gets the whole budget
                sel = np.nonzero(live[grp.index])
                if sel[0].size == 0:
                    continue
                pw, rt = self._opd_powers(grp, ws[gi], sel)
                sc = (rt * ws[gi][sel]).sum(axis=-1)
                keep = sc > weighted[grp.index[sel[0]], sel[1]]
                sub = (sel[0][keep], sel[1][keep])
                powers[gi] = powers[gi].copy()
                rates[gi] = rates[gi].copy()
                powers[gi][sub], rates[gi][sub] = pw[keep], rt[keep]
                weighted[grp.index[sub[0]], sub[1]] = sc[keep]
        if upper:
            if self.dbf is not Dbf.ZF:
                raise ValueError("an upper bound is only available with ZF-DBF")
            for gi, grp in enumerate(self.groups):
                n, s = grp.ues.shape
                gains, w = grp.zf_gain.reshape(-1, s), ws[gi].reshape(-1, s)
                pu, _ = p1_zf_batch(gains, w, p, noise, self.upper)
                # same per-UE rate then weighted-sum order as the feasible scores, so
                # saturated cells tie exactly instead of differing in the last bit
                r = rate_approx(gains * pu / noise, self.upper, br)
                ub[grp.index] = (r * w).sum(axis=-1).reshape(n, Q)
        return _Scores(weighted, powers, rates, ub)

    def _contenders(self, epd_weighted: np.ndarray, ws: list) -> np.ndarray:
        """Cells whose OPD score could still win some (beam set, RBL) argmax.

        A UE's discrete rate is at most its interference-free rate at the full
        budget, so a cell whose bound stays strictly below the best EPD score of
        every beam set containing it can never be selected and is not optimised.
        """
        best, _ = self._cell_best(epd_weighted)
        mask = self.space.member_mask
        n_z, Q = epd_weighted.shape
        thr = np.empty((n_z, Q))
        chunk = max(1, 2 ** 22 // max(1, mask.shape[0] * Q))
        for lo in range(0, n_z, chunk):
            m = mask[:, lo:lo + chunk]
            thr[lo:lo + chunk] = np.where(m[:, :, None], best[:, None, :], np.inf).min(axis=0)
        bound = np.zeros((n_z, Q))
        p, noise = self.budget.power_w, self.budget.noise_w
        for gi, grp in enumerate(self.groups):
            gain = grp.zf_gain if self.dbf is Dbf.ZF else np.diagonal(grp.h2, axis1=-2, axis2=-1)
            bound[grp.index] = (rate_discrete(gain * p / noise, self.tbl) * ws[gi]).sum(axis=-1)
        return bound >= thr

    def _opd_powers(self, grp: _SizeGroup, w: np.ndarray, sel):
        """OPD powers and discrete rates for the (set, RBL) cells ``sel``."""
        p, noise = self.budget.power_w, self.budget.noise_w
        w = w[sel]
        if self.dbf is Dbf.ZF:
            gains = grp.zf_gain[sel]
            pw, _ = p1_zf_batch(gains, w, p, noise, self.tight)
            sinr = gains * pw / noise
        else:
            h2 = grp.h2[sel]
            init, _ = p1_zf_batch(np.diagonal(h2, axis1=-2, axis2=-1), w, p, noise, self.tight)
            pw, _, _ = ndbf_local_search_batch(h2, w, p, noise, self.tight, init)
            sinr = _sinr(h2, pw, noise)
        return pw, rate_discrete(sinr, self.tbl)

    # -- MB decisions -----------------------------------------------------

    def _cell_best(self, weighted: np.ndarray):
        """For every (beam set, RBL): best score (>= 0, empty set allowed) and UE set index."""
        mask = self.space.member_mask
        n_l, Q = mask.shape[0], weighted.shape[1]
        best = np.zeros((n_l, Q))
        arg = np.full((n_l, Q), -1)
        chunk = max(1, 2 ** 22 // max(1, mask.shape[1] * Q))
        for lo in range(0, n_l, chunk):
            m = mask[lo:lo + chunk]
            vals = np.where(m[:, :, None], weighted[None], -np.inf)
            a = vals.argmax(axis=1)
            v = np.take_along_axis(vals, a[:, None, :], axis=1)[:, 0, :]
            pos = v > 0
            best[lo:lo + chunk] = np.where(pos, v, 0.0)
            arg[lo:lo + chunk] = np.where(pos, a, -1)
        return best, arg

    def plan(self, pf: PfState, pd: str = "opd", conb: bool = True,
             with_upper: bool = False) -> MbPlan:
        """Optimal (EPD) or feasible (OPD) plan for one MB.

        ``conb=False`` drops the one-beam-set-per-slot constraint and lets each
        RBL use its own beam set; the result is an over-estimate.
        """
        sc = self.scores(pf, pd, upper=with_upper)
        best, arg = self._cell_best(sc.weighted)
        Q = best.shape[1]
        if conb:
            li = int(np.argmax(best.sum(axis=1)))
            choice = arg[li]
            objective = float(best[li].sum())
            beam_set = self.space.beam_sets[li]
            rbl_beam_sets = None
        else:
            per_q = best.argmax(axis=0)
            choice = arg[per_q, np.arange(Q)]
            objective = float(best.max(axis=0).sum())
            beam_set = ()
            rbl_beam_sets = [self.space.beam_sets[i] for i in per_q]
        upper_obj = None
        if with_upper:
            ub_best, _ = self._cell_best(sc.upper)
            upper_obj = float(ub_best.sum(axis=1).max() if conb else ub_best.max(axis=0).sum())
        return self._assemble(sc, choice, beam_set, objective, upper_obj, rbl_beam_sets)

    def _assemble(self, sc: _Scores, choice, beam_set, objective, upper_obj, rbl_beam_sets):
        U, Q = self.eff.num_ues, self.eff.num_rbls
        rbl_rates = np.zeros((Q, U))
        ue_sets, powers, mcs = [], [], []
        for q in range(Q):
            k = int(choice[q])
            if k < 0:
                ue_sets.append(())
                powers.append(np.zeros(0))
                mcs.append([])
                continue
            gi, row = self._where[k]
            z = self.space.ue_sets[k]
            r = sc.rates[gi][row, q]
            rbl_rates[q, [u for u, _ in z]] = r
            ue_sets.append(z)
            powers.append(sc.powers[gi][row, q].copy())
            mcs.append(mcs_from_rate(r, self.tbl).tolist())
        return MbPlan(beam_set=beam_set, ue_sets=ue_sets, powers=powers, rbl_rates=rbl_rates,
                      objective=objective, upper_objective=upper_obj,
                      rbl_beam_sets=rbl_beam_sets, mcs=mcs)


def _sinr(h2, p, noise):
    rx = h2 * p[..., :, None]
    sig = np.diagonal(rx, axis1=-2, axis2=-1)
    return sig / (rx.sum(axis=-2) - sig + noise)


def solve_epd(space: SetSpace, eff: EffectiveChannelTensor, tbl: McsTable, pf: PfState,
              dbf: Dbf | str, budget: PrbBudget) -> MbPlan:
    """Optimal MB plan with equal power split inside each UE set."""
    return OfflinePlanner(space, eff, tbl, budget, dbf).plan(pf, pd="epd")


def solve_opd(space: SetSpace, eff: EffectiveChannelTensor, tbl: McsTable, pf: PfState,
              dbf: Dbf | str, budget: PrbBudget) -> tuple[MbPlan, float | None]:
    """Feasible OPD plan and, with ZF-DBF, an upper bound on its objective."""
    planner = OfflinePlanner(space, eff, tbl, budget, dbf)
    plan = planner.plan(pf, pd="opd", with_upper=planner.dbf is Dbf.ZF)
    return plan, plan.upper_objective


def solve_no_conb(space: SetSpace, eff: EffectiveChannelTensor, tbl: McsTable, pf: PfState,
                  dbf: Dbf | str, budget: PrbBudget, pd: str = "opd") -> float:
    """Objective when every RBL may choose its own beam set."""
    return OfflinePlanner(space, eff, tbl, budget, dbf).plan(pf, pd=pd, conb=False).objective
