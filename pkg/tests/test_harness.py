import csv
import json
import math

import pytest

from pinchtraffic import harness
from pinchtraffic.harness import CSV_HEADER, DESK_PARAMS, ExperimentSpec


def _rows_text(rows, tmp_path, name, timing=False):
    path = tmp_path / name
    harness.write_rows_csv(rows, path, include_timing=timing)
    return path.read_text()


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(kind="nope")
    with pytest.raises(ValueError):
        ExperimentSpec(kind="sweep-N", trials=0, sweep_values=[2])
    with pytest.raises(ValueError):
        ExperimentSpec(kind="sweep-N", sweep_values=[])
    with pytest.raises(ValueError):
        ExperimentSpec(kind="sweep-N", sweep_values=[3, 2])
    with pytest.raises(ValueError):
        ExperimentSpec(kind="sweep-tau", sweep_values=[0.1], objective="median")


def test_trial_seeds_distinct_and_stable():
    a = harness.trial_seeds(0, 20)
    assert a == harness.trial_seeds(0, 20) and len(set(a)) == 20
    assert harness.trial_seeds(0, 5) == a[:5]


def test_alg_compare_rows_and_gap():
    spec = ExperimentSpec(kind="alg-compare", trials=3, seed=1, sweep_values=[2, 4])
    rows = harness.run_alg_compare(spec)
    assert len(rows) == 3 * 2 * 3
    assert harness.finite_rows(rows)
    summary = {(s["sweep_value"], s["method"]): s for s in harness.summarize(rows)}
    for n in (2, 4):
        prop = summary[(n, "proposed")]["objective_mean_lin_db"]
        assert abs(prop - summary[(n, "exhaustive")]["objective_mean_lin_db"]) <= 0.01
        assert summary[(n, "pg")]["objective_mean_lin_db"] <= prop + 1e-9


def test_sweep_row_accounting_and_determinism(tmp_path):
    spec = ExperimentSpec(kind="sweep-N", trials=2, seed=3, sweep_values=[2, 3, 4, 5, 6])
    rows = harness.run_sweep(spec)
    assert len(rows) == 5 * 2 * 3
    first = _rows_text(rows, tmp_path, "a.csv")
    second = _rows_text(harness.run_sweep(spec), tmp_path, "b.csv")
    assert first == second
    header, *body = list(csv.reader(first.splitlines()))
    assert header == CSV_HEADER
    assert all(r[-1] == "0.0" for r in body)
    assert {r[0] for r in body} == {"sweep-N-avg"}


def test_parallel_matches_serial(tmp_path):
    base = dict(kind="sweep-tau", trials=3, seed=5, sweep_values=[0.02, 0.1], objective="maxmin")
    serial = _rows_text(harness.run_sweep(ExperimentSpec(**base)), tmp_path, "s.csv")
    parallel = _rows_text(harness.run_sweep(ExperimentSpec(**base, workers=2)), tmp_path, "p.csv")
    assert serial == parallel


def test_db_round_trip_in_rows():
    spec = ExperimentSpec(kind="sweep-Dx", trials=1, seed=0, sweep_values=[60.0])
    for row in harness.run_sweep(spec):
        back = 10 ** (float(harness._fmt(row.objective_db)) / 10)
        assert 10 * math.log10(back) == pytest.approx(row.objective_db, rel=1e-9)


def test_sweep_trends_small():
    spec = ExperimentSpec(kind="sweep-N", trials=4, seed=0, sweep_values=[1, 3, 5], methods=("proposed",))
    means = [s["objective_mean_lin_db"] for s in harness.summarize(harness.run_sweep(spec))]
    assert means == sorted(means)


def test_summary_columns(tmp_path):
    spec = ExperimentSpec(kind="sweep-Dx", trials=2, seed=0, sweep_values=[40.0, 80.0])
    summary = harness.summarize(harness.run_sweep(spec))
    assert len(summary) == 2 * 3
    s = summary[0]
    assert s["objective_mean_lin_db"] >= s["objective_mean_db"] - 1e-12  # Jensen
    path = tmp_path / "sum.csv"
    harness.write_summary_csv(summary, path, include_timing=False)
    assert "wall_time_mean_s" not in path.read_text().splitlines()[0]


def test_topview(tmp_path):
    spec = ExperimentSpec(kind="topview", seed=0)
    payload = harness.run_topview(spec, tmp_path / "a")
    harness.run_topview(spec, tmp_path / "b")
    for name in ("topview.json", "topview_grid.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert 0 <= payload["x_avg"] <= payload["d_x"] and 0 <= payload["x_maxmin"] <= payload["d_x"]
    assert abs(payload["x_avg"] - payload["x_maxmin"]) > DESK_PARAMS.eps_d
    rows = (tmp_path / "a" / "topview_grid.csv").read_text().splitlines()
    assert len(rows) - 1 == DESK_PARAMS.n_h * DESK_PARAMS.n_v
    assert json.loads((tmp_path / "a" / "topview.json").read_text())["x_avg"] == payload["x_avg"]


def test_validation_cases():
    cases = harness.run_validation(DESK_PARAMS.replace(n_antennas=3), cases=3, samples=20_000, seed=1)
    assert len(cases) == 3
    assert all(c.mc_stderr > 0 and c.closed_form > 0 for c in cases)


def test_run_dispatch():
    with pytest.raises(ValueError):
        harness.run(ExperimentSpec(kind="topview"))
    rows = harness.run(ExperimentSpec(kind="timing", trials=1, sweep_values=[2]))
    assert {r.method for r in rows} == {"proposed", "exhaustive", "pg"}
