"""Network realizations and the wide-band multi-cluster MIMO channel.

Each UE sees ``num_clusters`` scattering clusters of ``num_paths`` rays. The
channel matrix between the BS and UE ``u`` on reporting block ``q`` is

    G = 1/sqrt(N_path) * sum_{d,l} g_dl * exp(-j 2 pi tau_dl f_q) * a_rx(aoa) a_tx(aod)^H

with ``g_dl = sqrt(v_d * 10^(-PL/10) * kappa_dl) * exp(j phase_dl)``.

RBL indices are 0-based throughout the package: ``f_q = f_c - BW/2 + q*BW/Q``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class GeometryConfig:
    cell_radius_m: float = 75.0
    bs_height_m: float = 10.0
    exclusion_radius_m: float = 6.0
    carrier_hz: float = 28e9
    bandwidth_hz: float = 100e6

    def validate(self) -> None:
        for name in ("cell_radius_m", "bs_height_m", "exclusion_radius_m",
                     "carrier_hz", "bandwidth_hz"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.exclusion_radius_m >= self.cell_radius_m:
            raise ConfigError("exclusion_radius_m must be smaller than cell_radius_m")


@dataclass(frozen=True)
class ChannelConfig:
    """Small- and large-scale channel parameters (SI units, angles in degrees)."""

    num_bs_antennas: int = 128
    num_ue_antennas: int = 16
    num_rbls: int = 22
    num_clusters: int = 5
    num_paths: int = 10
    cluster_delay_mean_s: float = 200e-9
    path_delay_mean_s: float = 20e-9
    sector_half_width_deg: float = 60.0
    angle_spread_deg: float = 10.0
    pathloss_intercept_db: float = 61.4
    pathloss_exponent: float = 2.0
    shadowing_std_db: float = 5.8

    def validate(self) -> None:
        for name in ("num_bs_antennas", "num_ue_antennas", "num_rbls",
                     "num_clusters", "num_paths"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)!r}")
        for name in ("cluster_delay_mean_s", "path_delay_mean_s"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.angle_spread_deg < 0 or self.shadowing_std_db < 0:
            raise ConfigError("spreads must be non-negative")


@dataclass(frozen=True)
class ChannelRealization:
    """Large-scale and per-path parameters for every UE of one network drop.

    Array shapes use U = UEs, D = clusters, L = paths per cluster.
    """

    seed: int | None
    radius_m: np.ndarray          # (U,)
    azimuth_rad: np.ndarray       # (U,)
    pathloss_db: np.ndarray       # (U,)
    cluster_delay_s: np.ndarray   # (U, D)
    cluster_power: np.ndarray     # (U, D), rows sum to 1
    path_delay_s: np.ndarray      # (U, D, L)
    path_power: np.ndarray        # (U, D, L), sums to 1 over L
    path_phase: np.ndarray        # (U, D, L)
    aod_rad: np.ndarray           # (U, D, L)
    aoa_rad: np.ndarray           # (U, D, L)
    rbl_freqs_hz: np.ndarray      # (Q,)
    num_bs_antennas: int
    num_ue_antennas: int

    @property
    def num_ues(self) -> int:
        return self.pathloss_db.shape[0]

    @property
    def num_rbls(self) -> int:
        return self.rbl_freqs_hz.shape[0]

    @property
    def num_clusters(self) -> int:
        return self.cluster_power.shape[1]

    @property
    def num_paths(self) -> int:
        return self.path_power.shape[2]

    def path_gains(self, ue: int) -> np.ndarray:
        """Complex ray coefficients g_dl flattened to (D*L,), 1/sqrt(N_path) included."""
        amp = np.sqrt(self.cluster_power[ue][:, None] * self.path_power[ue]
                      * 10.0 ** (-0.1 * self.pathloss_db[ue]))
        g = amp * np.exp(1j * self.path_phase[ue])
        return g.ravel() / np.sqrt(self.num_paths)

    def path_delays(self, ue: int) -> np.ndarray:
        return (self.cluster_delay_s[ue][:, None] + self.path_delay_s[ue]).ravel()

    def subset(self, ues) -> "ChannelRealization":
        """Realization restricted to (or reordered/cloned by) the given UE indices."""
        idx = np.asarray(ues, dtype=int)
        per_ue = {name: getattr(self, name)[idx] for name in (
            "radius_m", "azimuth_rad", "pathloss_db", "cluster_delay_s", "cluster_power",
            "path_delay_s", "path_power", "path_phase", "aod_rad", "aoa_rad")}
        return ChannelRealization(seed=self.seed, rbl_freqs_hz=self.rbl_freqs_hz,
                                  num_bs_antennas=self.num_bs_antennas,
                                  num_ue_antennas=self.num_ue_antennas, **per_ue)


def rbl_frequencies(geom: GeometryConfig, num_rbls: int) -> np.ndarray:
    q = np.arange(num_rbls)
    return geom.carrier_hz - geom.bandwidth_hz / 2 + q * geom.bandwidth_hz / num_rbls


def array_response(num_antennas: int, angle_rad) -> np.ndarray:
    """Half-wavelength ULA response ``[1, e^{j pi sin a}, ..., e^{j (N-1) pi sin a}]``.

    ``angle_rad`` may be an array; the antenna axis is appended last.
    """
    k = np.arange(num_antennas)
    return np.exp(1j * np.pi * np.multiply.outer(np.sin(angle_rad), k))


def pathloss_db(distance_m, cfg: ChannelConfig, rng: np.random.Generator) -> np.ndarray:
    d = np.maximum(np.asarray(distance_m, dtype=float), 1.0)
    shadow = rng.normal(0.0, cfg.shadowing_std_db, size=d.shape)
    return cfg.pathloss_intercept_db + 10 * cfg.pathloss_exponent * np.log10(d) + shadow


def draw_realization(seed: int, num_ues: int, geom: GeometryConfig | None = None,
                     ch_cfg: ChannelConfig | None = None) -> ChannelRealization:
    """Drop ``num_ues`` UEs uniformly in the annulus and draw their channels."""
    geom = geom or GeometryConfig()
    ch_cfg = ch_cfg or ChannelConfig()
    geom.validate()
    ch_cfg.validate()
    if num_ues < 1:
        raise ConfigError("num_ues must be >= 1")
    rng = np.random.default_rng(seed)
    U, D, L = num_ues, ch_cfg.num_clusters, ch_cfg.num_paths

    r0, r1 = geom.exclusion_radius_m, geom.cell_radius_m
    radius = np.sqrt(rng.uniform(r0 ** 2, r1 ** 2, size=U))
    azimuth = rng.uniform(0.0, 2 * np.pi, size=U)
    pl = pathloss_db(np.hypot(radius, geom.bs_height_m), ch_cfg, rng)

    tau0 = rng.exponential(ch_cfg.cluster_delay_mean_s, size=(U, D))
    tau1 = rng.exponential(ch_cfg.path_delay_mean_s, size=(U, D, L))
    v = np.exp(-tau0 / ch_cfg.cluster_delay_mean_s)
    v /= v.sum(axis=1, keepdims=True)
    kappa = np.exp(-tau1 / ch_cfg.path_delay_mean_s)
    kappa /= kappa.sum(axis=2, keepdims=True)
    phase = rng.uniform(0.0, 2 * np.pi, size=(U, D, L))

    half = np.deg2rad(ch_cfg.sector_half_width_deg)
    spread = np.deg2rad(ch_cfg.angle_spread_deg)
    aod_c = rng.uniform(-half, half, size=(U, D, 1))
    aoa_c = rng.uniform(-half, half, size=(U, D, 1))
    aod = aod_c + spread * rng.standard_normal((U, D, L))
    aoa = aoa_c + spread * rng.standard_normal((U, D, L))

    return ChannelRealization(
        seed=seed, radius_m=radius, azimuth_rad=azimuth, pathloss_db=pl,
        cluster_delay_s=tau0, cluster_power=v, path_delay_s=tau1, path_power=kappa,
        path_phase=phase, aod_rad=aod, aoa_rad=aoa,
        rbl_freqs_hz=rbl_frequencies(geom, ch_cfg.num_rbls),
        num_bs_antennas=ch_cfg.num_bs_antennas, num_ue_antennas=ch_cfg.num_ue_antennas)


def channel_matrix_at(real: ChannelRealization, ue: int, freq_hz: float) -> np.ndarray:
    g = real.path_gains(ue) * np.exp(-2j * np.pi * real.path_delays(ue) * freq_hz)
    a_rx = array_response(real.num_ue_antennas, real.aoa_rad[ue].ravel())  # (P, Nu)
    a_tx = array_response(real.num_bs_antennas, real.aod_rad[ue].ravel())  # (P, Nb)
    return np.einsum("p,pi,pj->ij", g, a_rx, a_tx.conj())


def channel_matrix(real: ChannelRealization, ue: int, rbl_q: int) -> np.ndarray:
    """``N_u x N_b`` channel matrix of UE ``ue`` on RBL ``rbl_q`` (0-based)."""
    if not 0 <= ue < real.num_ues:
        raise IndexError(f"ue {ue} out of range [0, {real.num_ues})")
    if not 0 <= rbl_q < real.num_rbls:
        raise IndexError(f"rbl_q {rbl_q} out of range [0, {real.num_rbls})")
    return channel_matrix_at(real, ue, real.rbl_freqs_hz[rbl_q])


def rms_delay_spread(real: ChannelRealization, ue: int) -> float:
    """Power-weighted RMS delay spread of one UE's power-delay profile."""
    p = (real.cluster_power[ue][:, None] * real.path_power[ue]).ravel()
    tau = real.path_delays(ue)
    p = p / p.sum()
    mean = np.dot(p, tau)
    return float(np.sqrt(np.dot(p, (tau - mean) ** 2)))


def coherence_deviation(real: ChannelRealization, ue: int, rbl_q: int,
                        num_subchannels: int, subchannel_bw_hz: float) -> float:
    """Largest relative spread of |G| entries across the subchannels of one RBL.

    Diagnostic only: 0 means the RBL is perfectly frequency-flat.
    """
    f0 = real.rbl_freqs_hz[rbl_q]
    mags = np.stack([np.abs(channel_matrix_at(real, ue, f0 + k * subchannel_bw_hz))
                     for k in range(num_subchannels)])
    mean = mags.mean(axis=0)
    return float(((mags.max(axis=0) - mags.min(axis=0)) / np.maximum(mean, 1e-300)).max())
