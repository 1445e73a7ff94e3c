"""Acceptance gate: one test per criterion, summarised at the end of the run.

The full default sweep runs once per session (about two minutes on one core)
and feeds criteria 6, 7 and 9.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from activeprecision.harness.config import load_default, validate
from activeprecision.harness.grid import run_grid
from activeprecision.harness.verify import suite_gradcheck, suite_invariants, suite_oracle

GOLDEN = Path(__file__).parent / "golden" / "default_report.json"


@pytest.fixture(scope="module")
def invariants():
    return {c.name: c for c in suite_invariants(seed=0)}


@pytest.fixture(scope="module")
def sweep():
    cfg = load_default()
    t0 = time.perf_counter()
    report = run_grid(cfg, write=False)
    return cfg, report, time.perf_counter() - t0


def _by_gamma(report, gamma):
    (cell,) = [c for c in report.cells if c["gamma"] == gamma]
    return cell


@pytest.mark.criterion(1, "core formulas match scalar oracles on 100 random instances up to 8x8")
def test_criterion_1_formula_oracles(record_property):
    t0 = time.perf_counter()
    checks = suite_oracle(seed=0, n_instances=100)
    elapsed = time.perf_counter() - t0
    worst = max(c.worst for c in checks)
    record_property("detail", f"worst abs err {worst:.2e} over {', '.join(c.name for c in checks)}; {elapsed:.2f}s")
    assert all(c.passed for c in checks), [c for c in checks if not c.passed]
    assert worst <= 1e-12
    assert elapsed < 10.0


@pytest.mark.criterion(2, "SWSleep: gated attention equals baseline within 1e-12")
def test_criterion_2_sw_sleep_reduction(invariants, record_property):
    c = invariants["sw_sleep_equals_baseline"]
    record_property("detail", f"worst {c.worst:.2e}, {c.detail}")
    assert c.passed and c.worst <= 1e-12


@pytest.mark.criterion(3, "constant precision: gated attention equals baseline within 1e-12")
def test_criterion_3_constant_precision(invariants, record_property):
    c = invariants["constant_precision_equals_baseline"]
    record_property("detail", f"worst {c.worst:.2e}, {c.detail}")
    assert c.passed and c.worst <= 1e-12


@pytest.mark.criterion(4, "10^4 draws: pi in [pi_min, 1], attention rows sum to 1")
def test_criterion_4_bounds(invariants, record_property):
    bounds, rows = invariants["precision_bounds"], invariants["attention_rows_sum_to_one"]
    record_property("detail", f"bound violation {bounds.worst:.1e}; row-sum err {rows.worst:.2e}; {bounds.detail}")
    assert bounds.passed and bounds.worst == 0.0
    assert rows.passed and rows.worst <= 1e-12
    assert len(rows.detail) and rows.detail.startswith("10000 ")


@pytest.mark.criterion(5, "gradient check rel err < 1e-4, 10 seeds up to 8x8x8")
def test_criterion_5_gradcheck(record_property):
    t0 = time.perf_counter()
    (check,) = suite_gradcheck(seed=0, n_seeds=10, max_dim=8)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"worst rel err {check.worst:.2e}; {elapsed:.2f}s")
    assert check.passed and check.worst < 1e-4
    assert elapsed < 30.0


@pytest.mark.slow
@pytest.mark.criterion(6, "gamma=0.25: Co4 beats Baseline in >=18/20 seeds; gamma=2: no off-track; < 5 min")
def test_criterion_6_overload_comparison(sweep, record_property):
    cfg, report, elapsed = sweep
    hard, easy = _by_gamma(report, 0.25), _by_gamma(report, 2.0)
    record_property(
        "detail",
        f"wins {hard['co4_wins']}/{hard['n_seeds']} (p={hard['sign_test_p']:.1e}); "
        f"off-track at gamma=2 Baseline {easy['Baseline']['off_track_steps_total']}, Co4 {easy['Co4']['off_track_steps_total']}; "
        f"{elapsed:.0f}s",
    )
    assert sorted(c["gamma"] for c in report.cells) == [0.25, 0.5, 1.0, 2.0]
    assert len(cfg.seeds) == 20 and cfg.track.horizon == 2000
    assert hard["co4_wins"] >= 18
    assert hard["sign_test_p"] < 0.05
    assert easy["Baseline"]["off_track_steps_total"] == 0
    assert easy["Co4"]["off_track_steps_total"] == 0
    assert elapsed < 300.0
    # the shipped golden config reproduces the frozen report
    golden = json.loads(GOLDEN.read_text())
    assert report.provenance["config_hash"] == golden["config_hash"]
    for got, want in zip(report.cells, golden["cells"]):
        assert got["co4_wins"] == want["co4_wins"]
        for v in ("Baseline", "Co4"):
            assert got[v]["off_track_steps_total"] == want[v]["off_track_steps_total"]
            assert got[v]["rms_drift"]["mean"] == pytest.approx(want[v]["rms_drift"]["mean"], rel=1e-9)


@pytest.mark.slow
@pytest.mark.criterion(7, "Co4 effective s_r < s_r, recall >= 0.8, distractor retention <= 0.3")
def test_criterion_7_effective_rate(sweep, record_property):
    cfg, report, _ = sweep
    calibration = cfg.raw["calibration"]["retain_threshold"]
    assert calibration["selected"] == cfg.agent["retain_threshold"]
    co4 = [m for m in report.metrics.values() if m["variant"] == "Co4"]
    overload = [m for m in co4 if m["gamma"] < 1]
    recall = min(m["relevant_recall"] for m in co4)
    retention = max(m["distractor_retention"] for m in co4)
    record_property(
        "detail",
        f"threshold {cfg.agent['retain_threshold']}; min recall {recall:.3f}; max retention {retention:.3f}; "
        + ", ".join(f"s_r={c['s_r']}: eff {c['Co4']['effective_s_r_mean']:.1f}" for c in report.cells),
    )
    assert overload
    for c in report.cells:
        if c["gamma"] < 1:
            assert c["Co4"]["effective_s_r_mean"] < c["s_r"]
    assert all(m["effective_s_r"] < m["s_r"] for m in overload)
    assert recall >= 0.8
    assert retention <= 0.3


@pytest.mark.criterion(8, "byte-identical trajectory CSVs across runs and worker counts")
def test_criterion_8_determinism(tmp_path, record_property):
    cfg = validate(
        {
            "grid": [{"s_r": 25, "s_c": 50}, {"s_r": 200, "s_c": 50}],
            "seeds": [0, 1, 2],
            "track": {"horizon": 300},
        }
    )
    runs = {}
    for name, workers in (("a", 1), ("b", 1), ("c", 3)):
        out = tmp_path / name
        run_grid(cfg, out, parallel=workers)
        runs[name] = {p.name: p.read_bytes() for p in sorted((out / "trajectories").iterdir())}
        runs[name]["metrics.json"] = (out / "metrics.json").read_bytes()
    record_property("detail", f"{len(runs['a']) - 1} CSVs compared across 2 serial runs and 3 workers")
    assert len(runs["a"]) == 2 * 3 * 2 + 1
    assert runs["a"] == runs["b"] == runs["c"]


@pytest.mark.slow
@pytest.mark.criterion(9, "Baseline mean drift non-decreasing in s_r (one inversion within 1 std allowed)")
def test_criterion_9_monotone_overload(sweep, record_property):
    _, report, _ = sweep
    cells = sorted(report.cells, key=lambda c: c["s_r"])
    assert [c["s_r"] for c in cells] == [25, 50, 100, 200]
    means = np.array([c["Baseline"]["rms_drift"]["mean"] for c in cells])
    stds = np.array([c["Baseline"]["rms_drift"]["std"] for c in cells])
    drops = [(i, means[i] - means[i + 1]) for i in range(len(cells) - 1) if means[i + 1] < means[i]]
    record_property("detail", "means " + ", ".join(f"{m:.3f}" for m in means) + f"; inversions {[(cells[i]['s_r'], round(float(d), 4)) for i, d in drops]}")
    assert len(drops) <= 1
    for i, drop in drops:
        assert drop <= max(stds[i], stds[i + 1])
