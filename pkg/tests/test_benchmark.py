import math

import numpy as np
import pytest

from lbpp.benchmark import (
    BenchmarkConfig,
    _cell_seed,
    run_benchmark,
    write_normalized_summary,
    write_results_csv,
)
from lbpp.domain import PointPattern, standard_domain


def test_cell_seed_deterministic_and_distinct():
    assert _cell_seed(0, 1, 2) == _cell_seed(0, 1, 2)
    assert _cell_seed(0, 1, 2) != _cell_seed(0, 2, 1)
    assert _cell_seed(0, 1, 2) != _cell_seed(1, 1, 2)


def test_toy_scenario_rows_and_ordering():
    cfg = BenchmarkConfig(
        scenarios=("toy:5",),
        methods=("ks_ec", "lbpp_cos"),
        basis_sizes=(8, 16),
        replicates=2,
        quad_points_per_dim=256,
        ml2_budget=3,
    )
    rows = run_benchmark(cfg)
    # lbpp_cos x 2 sizes x 2 reps + ks_ec x 1 size x 2 reps
    assert len(rows) == 6
    keys = [(r["scenario"], r["method"], r["basis_size"], r["replicate"]) for r in rows]
    assert keys == sorted(keys)
    # ks_ec cells collapse the basis-size axis
    assert all(r["basis_size"] == 0 for r in rows if r["method"] == "ks_ec")
    ok = [r for r in rows if not r["note"]]
    assert ok, "all cells failed"
    for r in ok:
        assert r["l2_error"] >= 0
        assert math.isnan(r["test_ll"])  # no held-out split for synthetic truth
        assert r["fit_seconds"] > 0


def test_data_scenario_uses_split():
    rng = np.random.default_rng(2)
    pts = rng.random((80, 1)) * np.pi

    def loader(name):
        assert name == "fake"
        return PointPattern(pts, standard_domain(1))

    cfg = BenchmarkConfig(
        scenarios=("data:fake",),
        methods=("lbpp_cos",),
        basis_sizes=(8,),
        replicates=1,
        quad_points_per_dim=512,
        ml2_budget=3,
    )
    rows = run_benchmark(cfg, load_pattern=loader)
    assert len(rows) == 1
    r = rows[0]
    assert not r["note"]
    assert math.isnan(r["l2_error"]) and math.isnan(r["expected_ll"])
    assert np.isfinite(r["test_ll"])


def test_unknown_method_recorded_not_raised():
    cfg = BenchmarkConfig(
        scenarios=("toy:1",), methods=("bogus",), basis_sizes=(8,),
        quad_points_per_dim=64,
    )
    rows = run_benchmark(cfg)
    assert len(rows) == 1
    assert "bogus" in rows[0]["note"]
    assert math.isnan(rows[0]["l2_error"])


def test_unknown_scenario_raises():
    cfg = BenchmarkConfig(scenarios=("mystery:1",))
    with pytest.raises(ValueError):
        run_benchmark(cfg)


def test_results_csv_roundtrip(tmp_path):
    cfg = BenchmarkConfig(
        scenarios=("toy:5",), methods=("ks_ec",), basis_sizes=(8,),
        quad_points_per_dim=128,
    )
    rows = run_benchmark(cfg)
    path = tmp_path / "res.csv"
    write_results_csv(path, rows, '{"seed": 0}')
    lines = path.read_text().splitlines()
    assert lines[0] == '# config: {"seed": 0}'
    assert lines[1].split(",")[0] == "scenario"
    assert len(lines) == 2 + len(rows)


def test_normalized_summary_scales(tmp_path):
    rows = [
        {"scenario": "s", "method": "m", "basis_size": 8, "replicate": 0,
         "l2_error": 4.0, "expected_ll": -10.0, "test_ll": math.nan,
         "fit_seconds": 1.0, "note": ""},
        {"scenario": "s", "method": "m", "basis_size": 16, "replicate": 0,
         "l2_error": 2.0, "expected_ll": -5.0, "test_ll": math.nan,
         "fit_seconds": 2.0, "note": ""},
    ]
    path = tmp_path / "norm.csv"
    write_normalized_summary(path, rows)
    lines = path.read_text().splitlines()
    vals = [line.split(",") for line in lines[1:]]
    header = lines[0].split(",")
    col = header.index("l2_error")
    got = sorted(float(v[col]) for v in vals)
    assert got == [0.5, 1.0]
    col = header.index("expected_ll")
    got = sorted(float(v[col]) for v in vals)
    assert got == [-1.0, -0.5]
