"""SINR, discrete MCS rate function and its convex approximations.

All logarithms are base 2 and rates are in bit/s over one RBL of width B_r.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .beamforming import PrecodedChannels

DEFAULT_RBL_BANDWIDTH_HZ = 4.32e6


@dataclass(frozen=True)
class McsTable:
    thresholds: np.ndarray       # linear SINR, strictly increasing
    efficiencies: np.ndarray     # bit/s/Hz, strictly increasing
    rbl_bandwidth_hz: float = DEFAULT_RBL_BANDWIDTH_HZ

    def __post_init__(self):
        th = np.asarray(self.thresholds, dtype=float)
        se = np.asarray(self.efficiencies, dtype=float)
        if th.shape != se.shape or th.ndim != 1 or th.size == 0:
            raise ValueError("thresholds and efficiencies must be equal-length 1-D arrays")
        if th[0] <= 0 or np.any(np.diff(th) <= 0) or np.any(np.diff(se) <= 0):
            raise ValueError("MCS thresholds and efficiencies must be positive and strictly increasing")
        object.__setattr__(self, "thresholds", th)
        object.__setattr__(self, "efficiencies", se)

    @property
    def num_levels(self) -> int:
        return self.thresholds.size

    @property
    def s_max(self) -> float:
        return float(self.efficiencies[-1])

    @classmethod
    def from_csv(cls, source, rbl_bandwidth_hz: float = DEFAULT_RBL_BANDWIDTH_HZ) -> "McsTable":
        """Read a table with columns ``index, spectral_efficiency_bps_hz, threshold_db``."""
        if hasattr(source, "read"):
            text = source.read()
        else:
            with open(source, newline="") as fh:
                text = fh.read()
        rows = sorted(csv.DictReader(io.StringIO(text)), key=lambda r: int(r["index"]))
        se = [float(r["spectral_efficiency_bps_hz"]) for r in rows]
        th = [10 ** (float(r["threshold_db"]) / 10) for r in rows]
        return cls(np.array(th), np.array(se), rbl_bandwidth_hz)

    @classmethod
    def default(cls, rbl_bandwidth_hz: float = DEFAULT_RBL_BANDWIDTH_HZ) -> "McsTable":
        """The bundled 15-level CQI table (``data/mcs_cqi_table.csv``)."""
        with resources.files(__package__).joinpath("data/mcs_cqi_table.csv").open() as fh:
            return cls.from_csv(fh, rbl_bandwidth_hz)

    @classmethod
    def shannon(cls, efficiencies, rbl_bandwidth_hz: float = DEFAULT_RBL_BANDWIDTH_HZ) -> "McsTable":
        """Thresholds from Shannon inversion, ``2^s - 1``."""
        se = np.asarray(efficiencies, dtype=float)
        return cls(2.0 ** se - 1.0, se, rbl_bandwidth_hz)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["index", "spectral_efficiency_bps_hz", "threshold_db"])
        for i, (s, t) in enumerate(zip(self.efficiencies, self.thresholds), start=1):
            w.writerow([i, f"{s:.4f}", f"{10 * np.log10(t):.4f}"])
        return out.getvalue()


@dataclass(frozen=True)
class RateApprox:
    """Concave surrogate ``min(a*log2(1 + sinr/b), s_max)``."""

    a: float
    b: float
    s_max: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0 or self.s_max <= 0:
            raise ValueError("a, b and s_max must be positive")

    @classmethod
    def tight(cls, s_max: float) -> "RateApprox":
        return cls(1.237, 1.952, s_max)

    @classmethod
    def upper(cls, s_max: float) -> "RateApprox":
        return cls(1.181, 1.253, s_max)

    @property
    def saturation_sinr(self) -> float:
        """Smallest SINR at which the surrogate reaches ``s_max``."""
        return float(self.b * np.expm1(np.log(2.0) * self.s_max / self.a))


def sinr_all(h: PrecodedChannels | np.ndarray, powers, noise: float) -> np.ndarray:
    """SINR of every stream of a UE set; ``h[k, u]`` as in :class:`PrecodedChannels`."""
    hm = h.h if isinstance(h, PrecodedChannels) else np.asarray(h)
    p = np.asarray(powers, dtype=float)
    rx = np.abs(hm) ** 2 * p[:, None]           # power from stream k at receiver u
    sig = np.diagonal(rx, axis1=-2, axis2=-1)
    interf = rx.sum(axis=-2) - sig
    return sig / (interf + noise)


def sinr(h: PrecodedChannels | np.ndarray, powers, noise: float, ue: int | None) -> float:
    """SINR of position ``ue`` in the set, 0 when the UE is not part of it (``None``)."""
    if ue is None:
        return 0.0
    return float(sinr_all(h, powers, noise)[ue])


def select_mcs(sinr_lin, tbl: McsTable):
    """Highest MCS level whose threshold is met (1-based); 0 means no transmission."""
    idx = np.searchsorted(tbl.thresholds, sinr_lin, side="right")
    return int(idx) if np.ndim(idx) == 0 else idx


def rate_discrete(sinr_lin, tbl: McsTable):
    """Piece-wise constant MCS rate ``B_r * s_l`` in bit/s."""
    idx = np.searchsorted(tbl.thresholds, sinr_lin, side="right")
    se = np.concatenate(([0.0], tbl.efficiencies))[idx]
    out = tbl.rbl_bandwidth_hz * se
    return float(out) if np.ndim(out) == 0 else out


def mcs_from_rate(rate, tbl: McsTable):
    """Invert :func:`rate_discrete`: the MCS level that produced ``rate`` (0 for none)."""
    r = np.asarray(rate, dtype=float)
    idx = np.searchsorted(tbl.rbl_bandwidth_hz * tbl.efficiencies, r, side="left") + 1
    return np.where(r > 0, idx, 0)


def rate_approx(sinr_lin, ap: RateApprox, rbl_bandwidth_hz: float = DEFAULT_RBL_BANDWIDTH_HZ):
    """Convex-approximation rate ``B_r * min(a log2(1 + sinr/b), s_max)`` in bit/s."""
    se = np.minimum(ap.a * np.log2(1.0 + np.asarray(sinr_lin, dtype=float) / ap.b), ap.s_max)
    out = rbl_bandwidth_hz * se
    return float(out) if np.ndim(out) == 0 else out
