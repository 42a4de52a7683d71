"""Analog codebooks, beam alignment, effective channels and digital precoding."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, array_response
from .errors import DegenerateSetError

#: condition number above which a ZF UE set is treated as degenerate
ZF_MAX_CONDITION = 1e12


@dataclass(frozen=True)
class Codebook:
    vectors: np.ndarray  # (B, N), unit-norm rows
    angles_rad: np.ndarray

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.vectors.shape[1]


def build_codebook(num_antennas: int, num_beams: int) -> Codebook:
    """Beam-steering codebook with steering angles uniform in sin-space.

    Beam k (1-based) points at ``arcsin(-1 + (2k-1)/num_beams)``.
    """
    if num_beams < 1 or num_antennas < 1:
        raise ValueError("num_antennas and num_beams must be >= 1")
    k = np.arange(1, num_beams + 1)
    angles = np.arcsin(-1.0 + (2 * k - 1) / num_beams)
    vecs = array_response(num_antennas, angles) / np.sqrt(num_antennas)
    return Codebook(vectors=vecs, angles_rad=angles)


@dataclass(frozen=True)
class BeamAssignment:
    """Outcome of beam alignment: ``M`` ranked (BS beam, UE beam) pairs per UE."""

    bs_beams: np.ndarray   # (U, M) int
    ue_beams: np.ndarray   # (U, M) int
    metric: np.ndarray     # (U, M) |v^T G w|^2 of each pair
    bs_codebook: Codebook
    ue_codebook: Codebook

    @property
    def num_ues(self) -> int:
        return self.bs_beams.shape[0]

    @property
    def num_pairs(self) -> int:
        return self.bs_beams.shape[1]

    @property
    def preferred_beams(self) -> tuple[int, ...]:
        """B_p: the sorted distinct BS beams preferred by any UE/pair."""
        return tuple(int(b) for b in np.unique(self.bs_beams))

    def primary_beam(self, ue: int) -> int:
        return int(self.bs_beams[ue, 0])


def ba_metric(real: ChannelRealization, ue: int, cb_bs: Codebook, cb_ue: Codebook,
              rbl_q: int | None = None) -> np.ndarray:
    """``|v^T G w|^2`` for every (UE beam, BS beam) pair, shape (B_u, B_b)."""
    q = (real.num_rbls - 1) // 2 if rbl_q is None else rbl_q
    g = real.path_gains(ue) * np.exp(-2j * np.pi * real.path_delays(ue) * real.rbl_freqs_hz[q])
    rx = cb_ue.vectors @ array_response(real.num_ue_antennas, real.aoa_rad[ue].ravel()).T
    tx = array_response(real.num_bs_antennas, real.aod_rad[ue].ravel()).conj() @ cb_bs.vectors.T
    return np.abs((rx * g) @ tx) ** 2


def top_pairs(metric: np.ndarray, num_pairs: int) -> list[tuple[int, int, float]]:
    """Best ``num_pairs`` (bs, ue, value) entries of a (B_u, B_b) metric with distinct BS beams.

    Ties are broken by lowest (bs index, ue index).
    """
    bu, bb = np.indices(metric.shape)
    order = np.lexsort((bu.ravel(), bb.ravel(), -metric.ravel()))
    chosen, used = [], set()
    for flat in order:
        b, u = int(bb.flat[flat]), int(bu.flat[flat])
        if b in used:
            continue
        used.add(b)
        chosen.append((b, u, float(metric.flat[flat])))
        if len(chosen) == num_pairs:
            break
    return chosen


def beam_align(real: ChannelRealization, cb_bs: Codebook, cb_ue: Codebook,
               num_pairs: int = 1) -> BeamAssignment:
    """Exhaustive SNR-based beam alignment on the band-centre RBL."""
    if not 1 <= num_pairs <= cb_bs.size:
        raise ValueError(f"num_pairs must lie in [1, {cb_bs.size}]")
    U = real.num_ues
    bs = np.zeros((U, num_pairs), dtype=int)
    ue_b = np.zeros((U, num_pairs), dtype=int)
    met = np.zeros((U, num_pairs))
    for u in range(U):
        for i, (b, v, m) in enumerate(top_pairs(ba_metric(real, u, cb_bs, cb_ue), num_pairs)):
            bs[u, i], ue_b[u, i], met[u, i] = b, v, m
    return BeamAssignment(bs, ue_b, met, cb_bs, cb_ue)


@dataclass(frozen=True)
class EffectiveChannelTensor:
    """Scalar effective channels ``g[q, n, j, u, i] = v_{u,i}^T G_{q,u} w_{n,j}``.

    ``n, j``: owner UE and pair index of the BS beam; ``u, i``: receiving UE and
    the pair index of its UE beam.
    """

    g: np.ndarray  # (Q, U, M, U, M) complex
    assignment: BeamAssignment

    @property
    def num_rbls(self) -> int:
        return self.g.shape[0]

    @property
    def num_ues(self) -> int:
        return self.g.shape[1]

    def signal(self) -> np.ndarray:
        """(Q, U) signal channels using each UE's first pair."""
        U = self.num_ues
        idx = np.arange(U)
        return self.g[:, idx, 0, idx, 0]

    def single_pair(self) -> np.ndarray:
        """(Q, U, U) slice ``g[q, n, u]`` for first pairs (the M = 1 view)."""
        return self.g[:, :, 0, :, 0]


def effective_channels(real: ChannelRealization, ba: BeamAssignment) -> EffectiveChannelTensor:
    """Perfect-CE effective channels for all RBLs and owner/receiver pair combinations."""
    U, M, Q = ba.num_ues, ba.num_pairs, real.num_rbls
    w = ba.bs_codebook.vectors[ba.bs_beams.ravel()]  # (U*M, Nb)
    out = np.zeros((Q, U, M, U, M), dtype=complex)
    for u in range(U):
        g = real.path_gains(u)[None, :] * np.exp(
            -2j * np.pi * np.outer(real.rbl_freqs_hz, real.path_delays(u)))       # (Q, P)
        v = ba.ue_codebook.vectors[ba.ue_beams[u]]                                 # (M, Nu)
        rx = v @ array_response(real.num_ue_antennas, real.aoa_rad[u].ravel()).T   # (M, P)
        tx = array_response(real.num_bs_antennas, real.aod_rad[u].ravel()).conj() @ w.T  # (P, U*M)
        vals = np.einsum("ip,qp,pk->qki", rx, g, tx)  # (Q, U*M, M)
        out[:, :, :, u, :] = vals.reshape(Q, U, M, M)
    return EffectiveChannelTensor(out, ba)


@dataclass(frozen=True)
class PrecodedChannels:
    """End-to-end channels after ABF and DBF for one UE set on one RBL.

    ``h[k, u]`` is the channel seen by receiver ``u`` through the precoder of
    stream ``k`` (positions within the UE set). ``hbf_norms[k]`` is the norm of
    the overall hybrid beamforming vector of stream ``k``.
    """

    h: np.ndarray
    hbf_norms: np.ndarray

    @property
    def gains(self) -> np.ndarray:
        return np.abs(np.diag(self.h)) ** 2


def set_channel_matrix(g: np.ndarray, q: int, members) -> np.ndarray:
    """``G_eff(z)`` with row = receiver, column = precoded stream.

    ``members`` is a sequence of (ue, pair) tuples; each UE receives with the UE
    beam that belongs to its selected pair.
    """
    return np.array([[g[q, n, j, u, i] for (n, j) in members] for (u, i) in members])


def abf_matrix(ba: BeamAssignment, members) -> np.ndarray:
    """``F_ABF(z)``: BS beam vectors of the set as columns, shape (N_b, |z|)."""
    return ba.bs_codebook.vectors[[ba.bs_beams[u, j] for u, j in members]].T


def zf_precode(g_set: np.ndarray, abf: np.ndarray) -> PrecodedChannels:
    """Normalized zero-forcing precoding of a square effective channel.

    Each precoder column is scaled so that the overall hybrid vector
    ``F_ABF d_k`` has unit norm.
    """
    g_set = np.atleast_2d(np.asarray(g_set, dtype=complex))
    n = g_set.shape[0]
    if g_set.shape != (n, n) or abf.shape[1] != n:
        raise ValueError("ZF needs a square |z| x |z| effective channel and |z| ABF columns")
    sv = np.linalg.svd(g_set, compute_uv=False)
    if sv[-1] == 0 or sv[0] / sv[-1] > ZF_MAX_CONDITION:
        raise DegenerateSetError(f"effective channel condition number {sv[0] / max(sv[-1], 1e-300):.3g}")
    a = np.linalg.solve(g_set, np.eye(n))  # G^H (G G^H)^{-1} = G^{-1} when square
    norms = np.linalg.norm(abf @ a, axis=0)
    d = a / norms
    h = (g_set @ d).T
    return PrecodedChannels(h=h, hbf_norms=np.linalg.norm(abf @ d, axis=0))


def ndbf_channels(g_set: np.ndarray, abf: np.ndarray | None = None) -> PrecodedChannels:
    """Analog-only transmission: the precoder is the identity."""
    g_set = np.atleast_2d(np.asarray(g_set, dtype=complex))
    n = g_set.shape[0]
    norms = np.ones(n) if abf is None else np.linalg.norm(abf, axis=0)
    return PrecodedChannels(h=g_set.T.copy(), hbf_norms=norms)


def zf_gains_batch(g_sets: np.ndarray, gram: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Post-ZF signal gains ``|h_uu|^2`` for a stack of UE sets.

    ``g_sets`` is (..., n, n) with rows = receivers; ``gram`` is the matching
    (..., n, n) ABF Gram matrix ``F^H F``. Returns ``(gains, degenerate)`` where
    degenerate sets get zero gain.
    """
    n = g_sets.shape[-1]
    sv = np.linalg.svd(g_sets, compute_uv=False)
    smin, smax = sv[..., -1], sv[..., 0]
    degenerate = (smin <= 0) | (smax > ZF_MAX_CONDITION * np.maximum(smin, 1e-300))
    safe = np.where(degenerate[..., None, None], np.eye(n), g_sets)
    a = np.linalg.inv(safe)
    # ||F a_k||^2 = a_k^H Gram a_k, the inverse of the post-ZF gain
    quad = np.einsum("...ik,...ij,...jk->...k", a.conj(), gram, a).real
    gains = np.where(degenerate[..., None], 0.0, 1.0 / quad)
    return gains, degenerate
