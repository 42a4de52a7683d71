import json
import math

import numpy as np
import pytest

from mmwave_rrm.errors import CapacityError, ConfigError
from mmwave_rrm.harness import (RESULTS_COLUMNS, ExperimentConfig, MetricsReport, export, gm,
                                read_results_csv, results_csv, run_experiment, run_realization)

SMALL = dict(num_ues=3, rf_chains=2, num_mbs=3, realizations=2)


def test_derived_link_budget():
    cfg = ExperimentConfig()
    assert cfg.noise_prb_dbm == pytest.approx(-115.43, abs=5e-3)
    assert cfg.prb_power_dbm == pytest.approx(5.79, abs=5e-3)
    assert cfg.num_rbls == 22 and cfg.rbl_bandwidth_hz == pytest.approx(4.32e6)
    b = cfg.budget
    assert 10 * math.log10(b.power_w * 1e3) == pytest.approx(cfg.prb_power_dbm)


def test_gm_examples():
    assert gm([1.0, 4.0]) == pytest.approx(2.0)
    assert gm([0.0, 5.0]) == 0.0
    assert gm(np.full((4, 3), 10.0)) == pytest.approx(10.0)
    assert gm(np.array([[1.0, 2.0], [3.0, 6.0]])) == pytest.approx(math.sqrt(2 * 4))
    assert gm([1e9] * 50) == pytest.approx(1e9)  # no overflow from the product
    with pytest.raises(ValueError):
        gm([-1.0, 1.0])


@pytest.mark.parametrize("changes", [dict(num_ues=0), dict(scheme="greedy"), dict(dbf="mmse"),
                                     dict(pf_window=0.5), dict(num_pairs=2, scheme="heur"),
                                     dict(subchannels_per_rbl=100)])
def test_config_validation(changes):
    with pytest.raises(ConfigError):
        ExperimentConfig().replace(**changes)


def test_config_json_roundtrip(tmp_path):
    cfg = ExperimentConfig(**SMALL, seed=7)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.from_json(p) == cfg
    p.write_text(json.dumps({"num_ues": 4, "bogus": 1}))
    with pytest.raises(ConfigError, match="bogus"):
        ExperimentConfig.from_json(p)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(tmp_path / "missing.json")


def test_export_roundtrip(tmp_path):
    cfg = ExperimentConfig(**{**SMALL, "realizations": 3}, scheme="heur")
    report = run_experiment(cfg)
    paths = export(report, tmp_path / "out")
    rows = read_results_csv(paths["results"])
    assert len(rows) == 3 and tuple(rows[0]) == RESULTS_COLUMNS
    for row, r in zip(rows, report.results):
        assert int(row["seed"]) == r.seed and float(row["GM_bps"]) == r.gm
    summary = json.loads(paths["summary"].read_text())
    assert summary["gm_bar_bps"] == pytest.approx(report.gm_bar)
    lo, hi = summary["gm_ci95_bps"]
    assert lo <= summary["gm_bar_bps"] <= hi
    assert (tmp_path / "out" / "runtimes.csv").read_text().startswith("seed,")


def test_empty_report_has_header_only():
    assert results_csv(MetricsReport(ExperimentConfig(), [])) == ",".join(RESULTS_COLUMNS) + "\n"


def test_deterministic_results(tmp_path):
    cfg = ExperimentConfig(**SMALL, scheme="offline-opd", dbf="none")
    a = results_csv(run_experiment(cfg))
    b = results_csv(run_experiment(cfg))
    assert a == b


def test_realization_and_trace(tmp_path):
    cfg = ExperimentConfig(**SMALL, scheme="offline-opd")
    path = tmp_path / "t.jsonl"
    report = run_experiment(cfg, trace_path=path)
    lines = [json.loads(x) for x in path.read_text().splitlines()]
    assert len(lines) == cfg.realizations * cfg.num_mbs
    assert {"seed", "mb", "beam_set", "ue_sets", "powers_w", "mcs", "upper_objective"} <= set(lines[0])
    for r in report.results:
        assert r.throughput.shape == (cfg.num_mbs, cfg.num_ues)
        assert np.all(r.objectives <= r.upper_objectives * (1 + 1e-12))
        assert r.runtime_ms > 0


def test_capacity_error_names_seed():
    cfg = ExperimentConfig(num_ues=6, rf_chains=3, num_mbs=1, realizations=1, capacity=3, seed=11)
    with pytest.raises(CapacityError, match="seed 11"):
        run_realization(cfg, 11)
