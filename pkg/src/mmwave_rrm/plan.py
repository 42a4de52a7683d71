"""Types shared by the offline planner and the online schedulers."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class Dbf(str, enum.Enum):
    ZF = "zf"
    NONE = "none"


@dataclass(frozen=True)
class PrbBudget:
    """Per-PRB transmit budget and noise power, both in watts."""

    power_w: float
    noise_w: float


@dataclass(frozen=True)
class PfState:
    """Moving-average throughputs ``R_u`` of the proportional-fair scheduler."""

    avg: np.ndarray
    window: float = 10.0

    @classmethod
    def initial(cls, num_ues: int, r_init: float = 2.0, window: float = 10.0) -> "PfState":
        if r_init <= 0:
            raise ValueError("r_init must be positive")
        return cls(np.full(num_ues, float(r_init)), float(window))

    @property
    def weights(self) -> np.ndarray:
        """Objective weights ``1 / (W R_u)``."""
        return 1.0 / (self.window * self.avg)


def pf_update(state: PfState, throughput) -> PfState:
    """``R_u <- (1 - 1/W) R_u + lambda_u / W``."""
    lam = np.asarray(throughput, dtype=float)
    if np.any(lam < 0):
        raise ValueError("throughputs must be non-negative")
    w = state.window
    return PfState((1.0 - 1.0 / w) * state.avg + lam / w, w)


@dataclass
class MbPlan:
    """Decisions and outcome of one mega block.

    ``ue_sets[q]`` holds (ue, pair) members in stream order and ``powers[q]``
    their per-PRB powers. ``rbl_rates[q, u]`` is the realised MCS rate of UE u
    on RBL q (bit/s) and ``throughput`` its sum over RBLs.
    """

    beam_set: tuple
    ue_sets: list
    powers: list
    rbl_rates: np.ndarray
    objective: float
    upper_objective: float | None = None
    rbl_beam_sets: list | None = None
    mcs: list = field(default_factory=list)

    @property
    def throughput(self) -> np.ndarray:
        return self.rbl_rates.sum(axis=0)

    def to_dict(self) -> dict:
        d = {
            "beam_set": [int(b) for b in self.beam_set],
            "ue_sets": [[[int(u), int(j)] for u, j in z] for z in self.ue_sets],
            "powers_w": [[float(p) for p in ps] for ps in self.powers],
            "mcs": [[int(m) for m in ms] for ms in self.mcs],
            "throughput_bps": [float(x) for x in self.throughput],
            "objective": float(self.objective),
        }
        if self.upper_objective is not None:
            d["upper_objective"] = float(self.upper_objective)
        if self.rbl_beam_sets is not None:
            d["rbl_beam_sets"] = [[int(b) for b in ls] for ls in self.rbl_beam_sets]
        return d
