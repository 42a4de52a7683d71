"""``rrm-sim``: run experiments, parameter sweeps and the brute-force validation suite.

Exit codes: 0 success, 1 failed validation, 2 configuration error, 3 capacity error.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .errors import CapacityError, ConfigError
from .harness import SCHEMES, ExperimentConfig, export, run_experiment

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CAPACITY = 0, 1, 2, 3

# CLI flag -> config field
_OVERRIDES = {
    "scheme": "scheme", "dbf": "dbf", "users": "num_ues", "rf_chains": "rf_chains",
    "pairs": "num_pairs", "mbs": "num_mbs", "seed": "seed", "realizations": "realizations",
}


def _int_list(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    p.add_argument("--config", type=Path, help="JSON experiment config; omitted keys take defaults")
    p.add_argument("--scheme", choices=SCHEMES)
    p.add_argument("--dbf", choices=("zf", "none"))
    if sweep:
        p.add_argument("--users", type=_int_list, required=True, help="e.g. 4,6,8")
        p.add_argument("--rf-chains", type=_int_list, required=True, help="e.g. 2,4,6")
    else:
        p.add_argument("--users", type=int)
        p.add_argument("--rf-chains", type=int)
    p.add_argument("--pairs", type=int, help="preferred beam pairs per UE (offline schemes)")
    p.add_argument("--mbs", type=int, help="MBs per realization")
    p.add_argument("--seed", type=int)
    p.add_argument("--realizations", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rrm-sim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment")
    _common(run)
    run.add_argument("--trace", type=Path, help="write per-MB decisions as JSON lines")
    sweep = sub.add_parser("sweep", help="run a grid over users and RF chains")
    _common(sweep, sweep=True)
    orc = sub.add_parser("oracle", help="check the solvers against brute-force references")
    orc.add_argument("--instances", type=int, default=100)
    orc.add_argument("--seed", type=int, default=0)
    return ap


def _config(args, skip=()) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    changes = {field: getattr(args, flag) for flag, field in _OVERRIDES.items()
               if flag not in skip and getattr(args, flag, None) is not None}
    try:
        return cfg.replace(**changes)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _report_line(cfg: ExperimentConfig, report) -> str:
    lo, hi = report.gm_ci95
    return (f"{cfg.scheme}/{cfg.dbf} U={cfg.num_ues} K={cfg.rf_chains} M={cfg.num_pairs}: "
            f"GM-bar {report.gm_bar / 1e6:.2f} Mbit/s (95% CI {lo / 1e6:.2f}-{hi / 1e6:.2f}), "
            f"{report.runtime_ms[0]:.1f} ms/MB")


def cmd_run(args) -> int:
    cfg = _config(args)
    args.out.mkdir(parents=True, exist_ok=True)
    report = run_experiment(cfg, workers=args.workers, trace_path=args.trace)
    export(report, args.out)
    print(_report_line(cfg, report))
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _config(args, skip=("users", "rf_chains"))
    rows = ["U,K,scheme,dbf,M,gm_bar_bps,gm_ci95_low_bps,gm_ci95_high_bps"]
    for U in args.users:
        for K in args.rf_chains:
            cfg = base.replace(num_ues=U, rf_chains=K)
            report = run_experiment(cfg, workers=args.workers)
            export(report, args.out / f"U{U}_K{K}")
            lo, hi = report.gm_ci95
            rows.append(f"{U},{K},{cfg.scheme},{cfg.dbf},{cfg.num_pairs},"
                        f"{report.gm_bar!r},{lo!r},{hi!r}")
            print(_report_line(cfg, report))
    (args.out / "sweep.csv").write_text("\n".join(rows) + "\n")
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .link import McsTable, RateApprox
    from .offline import OfflinePlanner, enumerate_sets
    from .oracles import exhaustive_schedule, grid_power_optimum, tiny_instance
    from .plan import PfState, PrbBudget
    from .power import solve_p1_zf, waterfill

    rng = np.random.default_rng(args.seed)
    tbl = McsTable.default()
    ok = True

    t0, worst = time.perf_counter(), 0.0
    for _ in range(args.instances):
        ti = tiny_instance(rng)
        pf = PfState(1.0 / (10.0 * ti.weights))
        for dbf in ("zf", "none"):
            space = enumerate_sets(ti.eff.assignment, ti.K)
            got = OfflinePlanner(space, ti.eff, tbl, PrbBudget(1.0, 1.0), dbf).plan(pf, "epd").objective
            ref = exhaustive_schedule(ti.eff, ti.K, pf.weights, 1.0, 1.0, tbl, dbf == "zf", 2, 1)
            worst = max(worst, abs(got - ref) / max(abs(ref), 1e-300))
    passed = worst <= 1e-9
    ok &= passed
    print(f"{'PASS' if passed else 'FAIL'} EPD planner vs exhaustive schedules: "
          f"max rel err {worst:.2e} ({time.perf_counter() - t0:.1f} s)")

    t0, worst = time.perf_counter(), 0.0
    for _ in range(args.instances):
        n = int(rng.integers(2, 5))
        g, w = rng.uniform(0.05, 20, n), rng.uniform(0.2, 3, n)
        ap = RateApprox.tight(5.5547)
        sols = [(waterfill(g, w, 1.0, 1.0),
                 [lambda p, gu=gu, wu=wu: wu * np.log2(1 + gu * p) for gu, wu in zip(g, w)]),
                (solve_p1_zf(g, w, 1.0, 1.0, ap),
                 [lambda p, gu=gu, wu=wu: wu * np.minimum(ap.a * np.log2(1 + gu * p / ap.b), ap.s_max)
                  for gu, wu in zip(g, w)])]
        for sol, utils in sols:
            ref, _ = grid_power_optimum(utils, 1.0)
            worst = max(worst, (ref - sol.objective) / abs(ref))
    passed = worst <= 1e-4
    ok &= passed
    print(f"{'PASS' if passed else 'FAIL'} water-filling vs power grid: "
          f"max rel shortfall {worst:.2e} ({time.perf_counter() - t0:.1f} s)")
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        return cmd_oracle(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY


if __name__ == "__main__":
    sys.exit(main())
