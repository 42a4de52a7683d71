"""Experiment orchestration: configuration, the realization loop, metrics and export.

One realization is one network drop. Beam alignment happens once per drop and
the effective channels stay fixed for all ``num_mbs`` MBs of the drop; only the
PF state evolves from MB to MB.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .beamforming import beam_align, build_codebook, effective_channels
from .channel import ChannelConfig, ChannelRealization, GeometryConfig, draw_realization
from .errors import CapacityError, ConfigError
from .link import McsTable
from .offline import DEFAULT_CAPACITY, OfflinePlanner, enumerate_sets
from .online import RrState, run_benchmark_mb, run_heuristic_mb
from .plan import Dbf, PfState, PrbBudget, pf_update

SCHEMA_VERSION = 1
SCHEMES = ("offline-epd", "offline-opd", "offline-noconb", "bench", "heur")
RESULTS_COLUMNS = ("seed", "scheme", "dbf", "U", "K", "M", "GM_bps")
RUNTIME_COLUMNS = ("seed", "scheme", "dbf", "U", "K", "M", "runtime_ms", "setup_ms")


def dbm_to_w(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1e3


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce an experiment; defaults are the reference system.

    ``geometry`` and ``channel`` hold the model configs. Realization ``z`` uses
    seed ``seed + z``.
    """

    num_ues: int = 10
    rf_chains: int = 6
    bs_beams: int = 32
    ue_beams: int = 4
    num_pairs: int = 1
    num_mbs: int = 100
    realizations: int = 50
    slots_per_rbl: int = 20
    subchannels_per_rbl: int = 6
    subchannel_bw_hz: float = 720e3
    bs_power_dbm: float = 27.0
    noise_psd_dbm_hz: float = -174.0
    pf_window: float = 10.0
    r_init: float = 2.0
    scheme: str = "offline-opd"
    dbf: str = "zf"
    seed: int = 0
    capacity: int = DEFAULT_CAPACITY
    rr_reset_per_mb: bool = False
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)

    # -- derived ------------------------------------------------------------

    @property
    def num_rbls(self) -> int:
        return self.channel.num_rbls

    @property
    def rbl_bandwidth_hz(self) -> float:
        return self.subchannels_per_rbl * self.subchannel_bw_hz

    @property
    def noise_prb_dbm(self) -> float:
        return self.noise_psd_dbm_hz + 10.0 * math.log10(self.subchannel_bw_hz)

    @property
    def prb_power_dbm(self) -> float:
        return self.bs_power_dbm - 10.0 * math.log10(self.num_rbls * self.subchannels_per_rbl)

    @property
    def budget(self) -> PrbBudget:
        return PrbBudget(dbm_to_w(self.prb_power_dbm), dbm_to_w(self.noise_prb_dbm))

    # -- validation / IO ----------------------------------------------------

    def validate(self) -> "ExperimentConfig":
        self.geometry.validate()
        self.channel.validate()
        for name in ("num_ues", "rf_chains", "bs_beams", "ue_beams", "num_pairs", "num_mbs",
                     "realizations", "slots_per_rbl", "subchannels_per_rbl", "capacity"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if not self.subchannel_bw_hz > 0 or not self.pf_window >= 1 or not self.r_init > 0:
            raise ConfigError("subchannel_bw_hz and r_init must be positive, pf_window >= 1")
        used = self.num_rbls * self.rbl_bandwidth_hz
        if used > self.geometry.bandwidth_hz * (1 + 1e-12):
            raise ConfigError(f"{self.num_rbls} RBLs x {self.rbl_bandwidth_hz:g} Hz exceed the "
                              f"{self.geometry.bandwidth_hz:g} Hz band")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        try:
            Dbf(self.dbf)
        except ValueError:
            raise ConfigError(f"unknown dbf mode {self.dbf!r}; choose zf or none") from None
        if self.num_pairs > self.bs_beams:
            raise ConfigError("num_pairs cannot exceed the BS codebook size")
        if self.num_pairs > 1 and self.scheme in ("bench", "heur"):
            raise ConfigError("online schemes support num_pairs = 1 only")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        nested = {"geometry": GeometryConfig, "channel": ChannelConfig}
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for key, typ in nested.items():
            if key in data:
                sub = data[key]
                if not isinstance(sub, dict):
                    raise ConfigError(f"{key} must be an object")
                bad = set(sub) - {f.name for f in dataclasses.fields(typ)}
                if bad:
                    raise ConfigError(f"unknown {key} keys: {', '.join(sorted(bad))}")
                data[key] = typ(**sub)
        return cls(**data).validate()

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        return cls.from_dict(data)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes).validate()


@dataclass
class RealizationResult:
    """Outcome of one drop: ``throughput[o, u]`` is UE u's throughput in MB o (bit/s)."""

    seed: int
    throughput: np.ndarray
    runtimes_s: np.ndarray
    setup_s: float
    objectives: np.ndarray
    upper_objectives: np.ndarray | None = None
    num_preferred_beams: int = 0

    @property
    def mean_throughput(self) -> np.ndarray:
        return self.throughput.mean(axis=0)

    @property
    def gm(self) -> float:
        return gm(self.throughput)

    @property
    def runtime_ms(self) -> float:
        """Mean scheduling time per MB, with the per-drop setup amortised."""
        n = max(len(self.runtimes_s), 1)
        return 1e3 * (self.setup_s + float(np.sum(self.runtimes_s))) / n


def gm(throughputs) -> float:
    """Geometric mean over UEs of the MB-averaged throughputs.

    Accepts a (num_mbs, U) matrix or a 1-D vector of per-UE means; any UE with a
    zero mean makes the result 0.
    """
    t = np.asarray(throughputs, dtype=float)
    if np.any(t < 0):
        raise ValueError("throughputs must be non-negative")
    means = t.mean(axis=0) if t.ndim == 2 else t
    if means.size == 0:
        raise ValueError("no UEs")
    if np.any(means == 0):
        return 0.0
    return float(np.exp(np.mean(np.log(means))))


@dataclass
class MetricsReport:
    config: ExperimentConfig
    results: list

    @property
    def gms(self) -> np.ndarray:
        return np.array([r.gm for r in self.results])

    @property
    def gm_bar(self) -> float:
        return float(np.mean(self.gms)) if self.results else float("nan")

    @property
    def gm_ci95(self) -> tuple:
        """Normal-approximation 95% interval of the GM-bar over realizations."""
        g = self.gms
        if g.size < 2:
            return (self.gm_bar, self.gm_bar)
        half = 1.959963984540054 * g.std(ddof=1) / math.sqrt(g.size)
        return (self.gm_bar - half, self.gm_bar + half)

    @property
    def runtime_ms(self) -> tuple:
        """(mean, max) of the per-realization mean runtime per MB."""
        rt = [r.runtime_ms for r in self.results]
        return (float(np.mean(rt)), float(np.max(rt))) if rt else (float("nan"), float("nan"))


def _assignment(cfg: ExperimentConfig, real: ChannelRealization):
    cb_bs = build_codebook(cfg.channel.num_bs_antennas, cfg.bs_beams)
    cb_ue = build_codebook(cfg.channel.num_ue_antennas, cfg.ue_beams)
    return beam_align(real, cb_bs, cb_ue, cfg.num_pairs)


def run_realization(cfg: ExperimentConfig, seed: int, realization: ChannelRealization | None = None,
                    trace=None, tbl: McsTable | None = None) -> RealizationResult:
    """Run all MBs of one drop. ``trace`` is an optional writable text stream for JSON lines."""
    real = realization if realization is not None else draw_realization(
        seed, cfg.num_ues, cfg.geometry, cfg.channel)
    tbl = tbl or McsTable.default(cfg.rbl_bandwidth_hz)
    budget = cfg.budget
    ba = _assignment(cfg, real)
    eff = effective_channels(real, ba)
    U, K = real.num_ues, cfg.rf_chains
    dbf = Dbf(cfg.dbf)

    t0 = time.perf_counter()
    planner = None
    if cfg.scheme.startswith("offline"):
        try:
            space = enumerate_sets(ba, K, cfg.num_pairs, cfg.capacity)
        except CapacityError as exc:
            raise CapacityError(f"realization seed {seed}: {exc}") from exc
        planner = OfflinePlanner(space, eff, tbl, budget, dbf)
    setup = time.perf_counter() - t0

    pf = PfState.initial(U, cfg.r_init, cfg.pf_window)
    rr = RrState(reset_per_mb=cfg.rr_reset_per_mb)
    thr = np.zeros((cfg.num_mbs, U))
    runtimes = np.zeros(cfg.num_mbs)
    objectives = np.zeros(cfg.num_mbs)
    upper = np.zeros(cfg.num_mbs) if (cfg.scheme == "offline-opd" and dbf is Dbf.ZF) else None
    for o in range(cfg.num_mbs):
        t0 = time.perf_counter()
        if cfg.scheme == "offline-epd":
            plan = planner.plan(pf, pd="epd")
        elif cfg.scheme == "offline-opd":
            plan = planner.plan(pf, pd="opd", with_upper=upper is not None)
        elif cfg.scheme == "offline-noconb":
            plan = planner.plan(pf, pd="opd", conb=False)
        elif cfg.scheme == "heur":
            plan = run_heuristic_mb(eff, tbl, pf, dbf, budget, K)
        else:
            plan = run_benchmark_mb(eff, tbl, pf, dbf, budget, K, rr)
        runtimes[o] = time.perf_counter() - t0
        thr[o] = plan.throughput
        objectives[o] = plan.objective
        if upper is not None:
            upper[o] = plan.upper_objective
        if trace is not None:
            trace.write(json.dumps({"seed": int(seed), "mb": o, **plan.to_dict()}) + "\n")
        pf = pf_update(pf, plan.throughput)
    return RealizationResult(seed=int(seed), throughput=thr, runtimes_s=runtimes, setup_s=setup,
                             objectives=objectives, upper_objectives=upper,
                             num_preferred_beams=len(ba.preferred_beams))


def _run_one(args):
    cfg, seed = args
    return run_realization(cfg, seed)


def run_experiment(cfg: ExperimentConfig, workers: int = 1, trace_path=None) -> MetricsReport:
    """Run ``cfg.realizations`` drops; results are ordered by seed whatever ``workers`` is."""
    cfg.validate()
    seeds = [cfg.seed + z for z in range(cfg.realizations)]
    if trace_path is not None:
        with open(trace_path, "w") as fh:
            results = [run_realization(cfg, s, trace=fh) for s in seeds]
    elif workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, [(cfg, s) for s in seeds]))
    else:
        results = [run_realization(cfg, s) for s in seeds]
    return MetricsReport(cfg, results)


# -- export -------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def results_csv(report: MetricsReport) -> str:
    """Deterministic per-realization results; one row per drop."""
    cfg = report.config
    lines = [",".join(RESULTS_COLUMNS)]
    for r in report.results:
        lines.append(",".join([str(r.seed), cfg.scheme, cfg.dbf, str(cfg.num_ues),
                               str(cfg.rf_chains), str(cfg.num_pairs), _fmt(r.gm)]))
    return "\n".join(lines) + "\n"


def runtimes_csv(report: MetricsReport) -> str:
    cfg = report.config
    lines = [",".join(RUNTIME_COLUMNS)]
    for r in report.results:
        lines.append(",".join([str(r.seed), cfg.scheme, cfg.dbf, str(cfg.num_ues),
                               str(cfg.rf_chains), str(cfg.num_pairs),
                               f"{r.runtime_ms:.3f}", f"{1e3 * r.setup_s:.3f}"]))
    return "\n".join(lines) + "\n"


def summary_dict(report: MetricsReport) -> dict:
    lo, hi = report.gm_ci95
    rt_mean, rt_max = report.runtime_ms
    nan = lambda x: None if x is None or (isinstance(x, float) and math.isnan(x)) else x  # noqa: E731
    return {
        "schema_version": SCHEMA_VERSION,
        "config": report.config.to_dict(),
        "num_realizations": len(report.results),
        "gm_bar_bps": nan(report.gm_bar),
        "gm_ci95_bps": [nan(lo), nan(hi)],
        "runtime_ms_mean": nan(rt_mean),
        "runtime_ms_max": nan(rt_max),
    }


def export(report: MetricsReport, out_dir) -> dict:
    """Write ``results.csv``, ``runtimes.csv`` and ``summary.json`` into ``out_dir``."""
    out = Path(out_dir)
    paths = {"results": out / "results.csv", "runtimes": out / "runtimes.csv",
             "summary": out / "summary.json"}
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths["results"].write_text(results_csv(report))
        paths["runtimes"].write_text(runtimes_csv(report))
        paths["summary"].write_text(json.dumps(summary_dict(report), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    return paths


def read_results_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def dump_plan(plan, path) -> None:
    """Write one MB plan as JSON for auditing."""
    Path(path).write_text(json.dumps(plan.to_dict(), indent=2) + "\n")


def default_workers() -> int:
    return max(1, min(os.cpu_count() or 1, 8))
