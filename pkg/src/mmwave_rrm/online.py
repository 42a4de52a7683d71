"""Low-complexity online schedulers: the proposed heuristic and the round-robin benchmark.

Both work on one preferred pair per UE and keep one beam set per MB. The
caller owns the :class:`~mmwave_rrm.plan.PfState` and applies
:func:`~mmwave_rrm.plan.pf_update` with ``plan.throughput`` after each MB.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .beamforming import (BeamAssignment, EffectiveChannelTensor, abf_matrix, ndbf_channels,
                          set_channel_matrix, zf_precode)
from .errors import DegenerateSetError
from .link import McsTable, mcs_from_rate, rate_discrete, sinr_all
from .plan import Dbf, MbPlan, PfState, PrbBudget
from .power import capped_waterfill_batch, estimate_interference, iawf, waterfill


@dataclass(frozen=True)
class UeCoefficients:
    """Per-RBL UE coefficients ``c[q, u] = r[q, u] / R_u``.

    ``powers`` are the all-UE water-filling powers the coefficients were
    computed from; the N-DBF heuristic reuses them as interference estimates.
    """

    c: np.ndarray       # (Q, U)
    powers: np.ndarray  # (Q, U)
    rates: np.ndarray   # (Q, U) bit/s


def _single_pair(eff: EffectiveChannelTensor) -> None:
    if eff.assignment.num_pairs != 1:
        raise ValueError("online schedulers support one preferred pair per UE (M = 1)")


def ue_coefficients(eff: EffectiveChannelTensor, tbl: McsTable, pf: PfState,
                    budget: PrbBudget) -> UeCoefficients:
    """Water-fill over all UEs as if all were co-scheduled, ignoring interference."""
    gains = np.abs(eff.signal()) ** 2
    Q = gains.shape[0]
    w = np.broadcast_to(1.0 / pf.avg, gains.shape)
    p, _ = capped_waterfill_batch(gains, w, np.full(Q, budget.power_w), budget.noise_w)
    r = rate_discrete(gains * p / budget.noise_w, tbl)
    return UeCoefficients(c=r / pf.avg, powers=p, rates=r)


def beam_coefficients(coeffs: UeCoefficients, ba: BeamAssignment) -> dict:
    """``c_b``: sum over RBLs of the best UE coefficient among the UEs on beam ``b``."""
    beams = ba.bs_beams[:, 0]
    return {b: float(coeffs.c[:, beams == b].max(axis=1).sum()) for b in ba.preferred_beams}


def select_beams(coeffs: UeCoefficients, ba: BeamAssignment, K: int) -> tuple:
    """The ``L = min(K, |B_p|)`` beams of largest ``c_b``; ties favour lower beam ids."""
    if K < 1:
        raise ValueError("K must be >= 1")
    cb = beam_coefficients(coeffs, ba)
    ranked = sorted(cb, key=lambda b: (-cb[b], b))
    return tuple(sorted(ranked[:min(K, len(ranked))]))


def select_users(coeffs: UeCoefficients, ba: BeamAssignment, beam_set, q: int) -> list:
    """Per beam the UE with the largest positive coefficient on RBL ``q``.

    Returns (ue, 0) members sorted by UE; UEs with a zero coefficient are never
    picked, so the set may be empty.
    """
    beams = ba.bs_beams[:, 0]
    c = coeffs.c[q]
    chosen = []
    for b in beam_set:
        cand = np.flatnonzero(beams == b)
        if cand.size == 0:
            continue
        u = int(cand[np.argmax(c[cand])])  # first index wins ties
        if c[u] > 0:
            chosen.append(u)
    return [(u, 0) for u in sorted(chosen)]


def _zf_with_fallback(g: np.ndarray, q: int, ba: BeamAssignment, members: list, priority):
    """ZF-precode ``members``, dropping the lowest-priority UE while the set is degenerate."""
    members = list(members)
    while members:
        try:
            return members, zf_precode(set_channel_matrix(g, q, members), abf_matrix(ba, members))
        except DegenerateSetError:
            drop = min(range(len(members)), key=lambda k: (priority[members[k][0]], -members[k][0]))
            members.pop(drop)
    return members, None


@dataclass
class _RblOutcome:
    members: list
    powers: np.ndarray
    rates: np.ndarray


def _serve_rbl(eff: EffectiveChannelTensor, tbl: McsTable, pf: PfState, budget: PrbBudget,
               dbf: Dbf, q: int, members: list, priority, interference=None) -> _RblOutcome:
    """Precode, distribute power and map SINR to MCS rates for one RBL."""
    ba = eff.assignment
    noise = budget.noise_w
    if not members:
        return _RblOutcome([], np.zeros(0), np.zeros(0))
    if dbf is Dbf.ZF:
        members, h = _zf_with_fallback(eff.g, q, ba, members, priority)
        if h is None:
            return _RblOutcome([], np.zeros(0), np.zeros(0))
        ues = [u for u, _ in members]
        sol = waterfill(h.gains, 1.0 / pf.avg[ues], budget.power_w, noise)
    else:
        h = ndbf_channels(set_channel_matrix(eff.g, q, members))
        ues = [u for u, _ in members]
        if interference is None:
            sol = waterfill(h.gains, 1.0 / pf.avg[ues], budget.power_w, noise)
        else:
            sol = iawf(h.gains, 1.0 / pf.avg[ues], budget.power_w, noise, interference[ues])
    rates = rate_discrete(sinr_all(h, sol.powers, noise), tbl)
    return _RblOutcome(members, sol.powers, np.atleast_1d(rates))


def _to_plan(eff, tbl, pf, beam_set, outcomes) -> MbPlan:
    U, Q = eff.num_ues, eff.num_rbls
    rbl_rates = np.zeros((Q, U))
    for q, o in enumerate(outcomes):
        rbl_rates[q, [u for u, _ in o.members]] = o.rates
    objective = float(pf.weights @ rbl_rates.sum(axis=0))
    return MbPlan(beam_set=tuple(beam_set), ue_sets=[tuple(o.members) for o in outcomes],
                  powers=[o.powers for o in outcomes], rbl_rates=rbl_rates, objective=objective,
                  mcs=[mcs_from_rate(o.rates, tbl).tolist() for o in outcomes])


def run_heuristic_mb(eff: EffectiveChannelTensor, tbl: McsTable, pf: PfState, dbf: Dbf | str,
                     budget: PrbBudget, K: int) -> MbPlan:
    """One MB of the coefficient-driven heuristic.

    Beam selection and user selection follow the UE coefficients; power is
    water-filled on post-ZF gains (ZF) or on interference-weighted gains
    (N-DBF), with interference estimated from the coefficient powers.
    """
    _single_pair(eff)
    dbf = Dbf(dbf)
    ba = eff.assignment
    coeffs = ue_coefficients(eff, tbl, pf, budget)
    beam_set = select_beams(coeffs, ba, K)
    primary = ba.bs_beams[:, 0]
    g1 = eff.single_pair()
    outcomes = []
    for q in range(eff.num_rbls):
        members = select_users(coeffs, ba, beam_set, q)
        interf = None
        if dbf is Dbf.NONE:
            interf = estimate_interference(g1[q], coeffs.powers[q], primary)
        outcomes.append(_serve_rbl(eff, tbl, pf, budget, dbf, q, members, coeffs.c[q], interf))
    return _to_plan(eff, tbl, pf, beam_set, outcomes)


@dataclass
class RrState:
    """Round-robin cursors of the benchmark.

    ``beam_cursor`` indexes the sorted B_p; ``ue_cursors`` keeps one cursor per
    beam set so that returning to a beam set resumes its UE-set cycle. With
    ``reset_per_mb`` the UE cursors restart at every MB.
    """

    beam_cursor: int = 0
    ue_cursors: dict = field(default_factory=dict)
    reset_per_mb: bool = False


def benchmark_ue_sets(ba: BeamAssignment, beam_set) -> list:
    """All one-UE-per-beam sets of ``beam_set`` in lexicographic order, as (ue, 0) members."""
    beams = ba.bs_beams[:, 0]
    per_beam = [[int(u) for u in np.flatnonzero(beams == b)] for b in beam_set]
    return [sorted((u, 0) for u in combo) for combo in itertools.product(*per_beam)]


def run_benchmark_mb(eff: EffectiveChannelTensor, tbl: McsTable, pf: PfState, dbf: Dbf | str,
                     budget: PrbBudget, K: int, rr: RrState) -> MbPlan:
    """One MB of the channel-agnostic round-robin benchmark; advances ``rr`` in place."""
    _single_pair(eff)
    dbf = Dbf(dbf)
    ba = eff.assignment
    bp = ba.preferred_beams
    L = min(K, len(bp))
    beam_set = tuple(sorted(bp[(rr.beam_cursor + k) % len(bp)] for k in range(L)))
    rr.beam_cursor = (rr.beam_cursor + L) % len(bp)
    if rr.reset_per_mb:
        rr.ue_cursors.clear()
    sets = benchmark_ue_sets(ba, beam_set)
    gains = np.abs(eff.signal()) ** 2
    outcomes = []
    for q in range(eff.num_rbls):
        cur = rr.ue_cursors.get(beam_set, 0)
        members = sets[cur % len(sets)]
        rr.ue_cursors[beam_set] = (cur + 1) % len(sets)
        outcomes.append(_serve_rbl(eff, tbl, pf, budget, dbf, q, members, gains[q] / pf.avg))
    return _to_plan(eff, tbl, pf, beam_set, outcomes)
