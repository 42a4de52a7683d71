"""Brute-force reference solvers used for validation.

These deliberately share no code with the planners and power solvers: sets are
enumerated straight from the definitions, precoders come from a
pseudo-inverse, and the MCS staircase is looked up with :mod:`bisect`.
"""
from __future__ import annotations

import bisect
import heapq
import itertools
from dataclasses import dataclass

import numpy as np

from .beamforming import BeamAssignment, EffectiveChannelTensor, build_codebook


def beam_sets_and_ue_sets(ba: BeamAssignment, K: int, M: int = 1):
    """``{beam set: [ue sets]}`` built by filtering every (ue -> pair or nothing) map."""
    U = ba.num_ues
    bp = sorted({int(b) for b in ba.bs_beams[:, :M].ravel()})
    L = min(K, len(bp))
    out = {}
    for ls in itertools.combinations(bp, L):
        allowed = set(ls)
        sets = []
        for choice in itertools.product(range(-1, M), repeat=U):
            members = [(u, j) for u, j in enumerate(choice) if j >= 0]
            beams = [int(ba.bs_beams[u, j]) for u, j in members]
            if members and len(set(beams)) == len(beams) and allowed.issuperset(beams):
                sets.append(tuple(members))
        out[ls] = sets
    return out


def staircase_rate(sinr: float, thresholds, efficiencies, bandwidth: float) -> float:
    k = bisect.bisect_right(list(thresholds), sinr)
    return 0.0 if k == 0 else bandwidth * efficiencies[k - 1]


def set_sinr(eff: EffectiveChannelTensor, q: int, members, power: np.ndarray, noise: float,
             zf: bool, max_cond: float = 1e12) -> np.ndarray | None:
    """SINR of each member; ``None`` for a degenerate ZF set."""
    g = eff.g
    G = np.array([[g[q, n, j, u, i] for (n, j) in members] for (u, i) in members])
    if zf:
        if np.linalg.cond(G) > max_cond:
            return None
        D = np.linalg.pinv(G)
        F = eff.assignment.bs_codebook.vectors[[eff.assignment.bs_beams[u, j] for u, j in members]].T
        D = D / np.linalg.norm(F @ D, axis=0)
        H = G @ D
    else:
        H = G
    P = np.abs(H) ** 2 * power[None, :]
    sig = np.diag(P)
    return sig / (P.sum(axis=1) - sig + noise)


def exhaustive_schedule(eff: EffectiveChannelTensor, K: int, weights, budget_w: float,
                        noise_w: float, tbl, zf: bool, num_slots: int, num_subch: int,
                        M: int = 1) -> float:
    """Best PF objective over every integer schedule with equal power split.

    Each slot picks a beam set; each PRB (slot, subchannel, RBL) independently
    picks one UE set of that slot's beam set, or stays idle. A UE's MB
    throughput is its rate averaged over the PRBs of each RBL, summed over RBLs.
    """
    ba = eff.assignment
    Q = eff.num_rbls
    w = np.asarray(weights, dtype=float)
    th, se, br = tbl.thresholds, tbl.efficiencies, tbl.rbl_bandwidth_hz
    spaces = beam_sets_and_ue_sets(ba, K, M)

    score = {}
    for sets in spaces.values():
        for z in sets:
            if z in score:
                continue
            p = np.full(len(z), budget_w / len(z))
            row = []
            for q in range(Q):
                s = set_sinr(eff, q, z, p, noise_w, zf)
                if s is None:
                    row.append(0.0)
                else:
                    row.append(sum(w[u] * staircase_rate(x, th, se, br) for (u, _), x in zip(z, s)))
            score[z] = row

    prbs = [(t, f, q) for t in range(num_slots) for f in range(num_subch) for q in range(Q)]
    best = 0.0
    for slot_sets in itertools.product(list(spaces), repeat=num_slots):
        options = [[None] + spaces[slot_sets[t]] for t, _, _ in prbs]
        for pick in itertools.product(*options):
            total = 0.0
            for (_, _, q), z in zip(prbs, pick):
                if z is not None:
                    total += score[z][q]
            best = max(best, total / (num_slots * num_subch))
    return best


@dataclass
class TinyInstance:
    eff: EffectiveChannelTensor
    K: int
    weights: np.ndarray


def tiny_instance(rng: np.random.Generator, max_ues: int = 3, max_beams: int = 3,
                  num_rbls: int = 2, noise_w: float = 1.0) -> TinyInstance:
    """Random effective channels with SNRs spread over the MCS range."""
    U = int(rng.integers(1, max_ues + 1))
    pool = rng.choice(8, size=int(rng.integers(1, max_beams + 1)), replace=False)
    cb = build_codebook(8, 8)
    bs = rng.choice(pool, size=(U, 1))
    ba = BeamAssignment(bs.astype(int), np.zeros((U, 1), dtype=int), np.ones((U, 1)), cb,
                        build_codebook(1, 1))
    amp = 10 ** (rng.uniform(-12, 25, size=(num_rbls, U, 1, U, 1)) / 20) * np.sqrt(noise_w)
    cross = np.where(np.eye(U, dtype=bool)[None, :, None, :, None], 1.0,
                     10 ** (rng.uniform(-30, -3, size=(num_rbls, U, 1, U, 1)) / 20))
    phase = np.exp(2j * np.pi * rng.random((num_rbls, U, 1, U, 1)))
    g = amp * cross * phase
    return TinyInstance(EffectiveChannelTensor(g, ba), int(rng.integers(1, 4)),
                        rng.uniform(0.2, 2.0, size=U) / 1e6)


def grid_power_optimum(utilities, budget: float, step_fraction: float = 1e-4) -> tuple:
    """Maximise a sum of concave per-user utilities on a power grid.

    ``utilities`` are vectorised callables ``f_u(p)``. Powers are multiples of
    ``step_fraction * budget`` with total at most ``budget``. Two users are
    enumerated outright; for more users the exact grid optimum is reached by
    handing out grid steps greedily by marginal gain, which is optimal for
    separable concave objectives. Returns ``(objective, powers)``.
    """
    n_steps = int(round(1.0 / step_fraction))
    h = budget / n_steps
    n = len(utilities)
    if n == 2:
        k = np.arange(n_steps + 1)
        vals = utilities[0](k * h) + utilities[1]((n_steps - k) * h)
        i = int(np.argmax(vals))
        return float(vals[i]), np.array([i * h, (n_steps - i) * h])
    levels = np.zeros(n, dtype=int)
    cur = np.array([float(f(0.0)) for f in utilities])
    heap = []
    for u, f in enumerate(utilities):
        heapq.heappush(heap, (-(float(f(h)) - cur[u]), u))
    for _ in range(n_steps):
        gain, u = heapq.heappop(heap)
        if -gain <= 0:
            break
        levels[u] += 1
        cur[u] = float(utilities[u](levels[u] * h))
        heapq.heappush(heap, (-(float(utilities[u]((levels[u] + 1) * h)) - cur[u]), u))
    return float(cur.sum()), levels * h
