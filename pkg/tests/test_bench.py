from __future__ import annotations

import math

import numpy as np
import pytest

import lowbmm.bench as bench
from lowbmm.bench import METRICS, Scenario, aggregate, make_dataset, run_benchmark


def test_degenerate_single_rep_is_perfect():
    sc = Scenario(n=12, n_star=4, N=10, alpha=1e4, iterations=2000)
    res = run_benchmark(sc, repetitions=1, seed=0)
    for method in ("lowbmm", "borda"):
        agg = res.aggregate[method]
        assert agg["coverage"]["mean"] == 1.0 and agg["d_R"]["mean"] == 0 and agg["d_norm"]["mean"] == 0
        assert agg["repetitions"] == 1 and agg["failures"] == 0


def test_aggregate_equals_row_means():
    sc = Scenario(n=10, n_star=4, N=5, alpha=1.0, iterations=300)
    res = run_benchmark(sc, repetitions=6, seed=3)
    assert len(res.rows) == 12
    for method in ("lowbmm", "borda"):
        rows = [r for r in res.rows if r["method"] == method]
        for key in ("coverage", "d_R", "d_R_ranks"):
            vals = [r[key] for r in rows]
            assert res.aggregate[method][key]["mean"] == pytest.approx(sum(vals) / len(vals))
            assert res.aggregate[method][key]["std"] == pytest.approx(np.std(vals, ddof=1))


def test_benchmark_is_deterministic_across_workers():
    sc = Scenario(n=10, n_star=3, N=5, alpha=2.0, iterations=200)
    a = run_benchmark(sc, repetitions=4, seed=9)
    b = run_benchmark(sc, repetitions=4, seed=9, workers=3)
    strip = lambda rows: [{k: v for k, v in r.items() if k != "wall_time_sec"} for r in rows]
    assert strip(a.rows) == strip(b.rows)


def test_failures_are_recorded(monkeypatch):
    real = bench._fit

    def flaky(method, ds, scenario, seed):
        if method == "lowbmm":
            raise RuntimeError("boom")
        return real(method, ds, scenario, seed)

    monkeypatch.setattr(bench, "_fit", flaky)
    res = run_benchmark(Scenario(n=8, n_star=3, N=4, alpha=1.0), repetitions=2, seed=0)
    bad = [r for r in res.rows if r["method"] == "lowbmm"]
    assert all(r["error"] == "RuntimeError: boom" and math.isnan(r["d_R"]) for r in bad)
    assert res.aggregate["lowbmm"]["failures"] == 2 and res.aggregate["lowbmm"]["d_R"]["mean"] is None
    assert res.aggregate["borda"]["failures"] == 0


def test_infinite_values_have_no_std():
    rows = [{"method": "m", "error": None, **{k: 1.0 for k in METRICS}} for _ in range(2)]
    rows[0]["d_norm"] = math.inf
    agg = aggregate(rows, ["m"])["m"]
    assert math.isinf(agg["d_norm"]["mean"]) and agg["d_norm"]["std"] is None
    assert agg["coverage"] == {"mean": 1.0, "std": 0.0}


def test_noise_scenario_dataset():
    sc = Scenario(n=12, n_star=4, N=20, alpha=50.0, noise_levels=2)
    ds, truth = make_dataset(sc, 1)
    clean, _ = make_dataset(Scenario(n=12, n_star=4, N=20, alpha=50.0), 1)
    assert not np.array_equal(ds.rows, clean.rows)


def test_bad_arguments():
    with pytest.raises(ValueError):
        Scenario(n=5, n_star=2, N=3, alpha=1.0, generator="nope")
    with pytest.raises(ValueError):
        run_benchmark(Scenario(n=5, n_star=2, N=3, alpha=1.0), methods=["mm"])
    with pytest.raises(ValueError):
        run_benchmark(Scenario(n=5, n_star=2, N=3, alpha=1.0), repetitions=0)
