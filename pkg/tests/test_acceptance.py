"""Acceptance criteria, each run at its stated tolerance.

Every test records one PASS/FAIL line (printed in the terminal summary by
``conftest.py``) before asserting.  Seeds are fixed so the numbers below
are reproducible; reference values quoted in the details are the benchmark
targets each criterion is anchored to.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
import time

import numpy as np
import pytest

import oracles
from lowbmm import io as lio
from lowbmm.alpha import estimate_alpha
from lowbmm.bench import Scenario, run_benchmark
from lowbmm.cli import main
from lowbmm.datagen import GroundTruth, RankingDataset, gen_top_rank
from lowbmm.mallows import sample_mallows
from lowbmm.metrics import d_norm
from lowbmm.perms import footrule, is_permutation, kendall, max_footrule
from lowbmm.postprocess import PosteriorSummary, selection_frequencies
from lowbmm.sampler import SamplerConfig, run_chain

pytestmark = pytest.mark.slow

RESULTS: dict[str, tuple[bool, str]] = {}


def record(name: str, ok: bool, detail: str) -> None:
    RESULTS[name] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'}  criterion {name}: {detail}")
    assert ok, detail


def within(value, target, tol) -> bool:
    return abs(value - target) <= tol


# --------------------------------------------------------------------------
# 1. exact posterior on a tiny instance


def test_criterion_1_exact_posterior():
    data = np.array([[1, 2, 3, 4], [2, 1, 3, 4], [1, 3, 2, 4]])
    exact = oracles.lowbmm_posterior(data, 2, 2.0)
    t0 = time.perf_counter()
    s = run_chain(data, SamplerConfig(alpha=2.0, n_star=2, iterations=1_000_000, burn_in=10_000, thin=1, seed=1))
    states = zip(map(tuple, s.aset_draws.tolist()), map(tuple, s.rho_draws.tolist()))
    tv = oracles.total_variation(oracles.empirical(states), exact)
    elapsed = time.perf_counter() - t0
    record("1", len(exact) == 12 and tv <= 0.02 and elapsed < 30,
           f"12 joint states, TV = {tv:.4f} (<= 0.02) over {len(s)} draws in {elapsed:.1f} s (< 30 s)")


# --------------------------------------------------------------------------
# 2-4. small and medium top-rank benchmarks


@pytest.fixture(scope="module")
def bench_n20():
    t0 = time.perf_counter()
    res = run_benchmark(Scenario(n=20, n_star=8, N=5, alpha=2.0, iterations=1000), repetitions=50, seed=2024)
    return res, time.perf_counter() - t0


def test_criterion_2_lowbmm_n20(bench_n20):
    res, elapsed = bench_n20
    a = res.aggregate["lowbmm"]
    p, dn, dr = a["coverage"]["mean"], a["d_norm"]["mean"], a["d_R"]["mean"]
    record("2", p >= 0.95 and within(dn, 5.17, 1.5) and within(dr, 12.06, 4) and elapsed < 120,
           f"p = {p:.3f} (>= 0.95), d_norm = {dn:.2f} (5.17 +- 1.5), d_R = {dr:.2f} (12.06 +- 4), "
           f"{elapsed:.1f} s for both methods")


def test_criterion_3_borda_n20(bench_n20):
    res, _ = bench_n20
    a = res.aggregate["borda"]
    p, dn, dr = a["coverage"]["mean"], a["d_norm"]["mean"], a["d_R"]["mean"]
    record("3", p >= 0.95 and within(dn, 5.29, 1.5) and within(dr, 12.24, 4),
           f"p = {p:.3f} (>= 0.95), d_norm = {dn:.2f} (5.29 +- 1.5), d_R = {dr:.2f} (12.24 +- 4)")


def test_criterion_4_lowbmm_n100():
    t0 = time.perf_counter()
    res = run_benchmark(Scenario(n=100, n_star=10, N=10, alpha=2.0, iterations=2000),
                        methods=("lowbmm",), repetitions=50, seed=2024)
    elapsed = time.perf_counter() - t0
    a = res.aggregate["lowbmm"]
    p, dn = a["coverage"]["mean"], a["d_norm"]["mean"]
    record("4", p >= 0.95 and within(dn, 25.10, 6) and elapsed < 600,
           f"p = {p:.3f} (>= 0.95), d_norm = {dn:.2f} (25.10 +- 6), {elapsed:.1f} s (< 600 s)")


# --------------------------------------------------------------------------
# 5. large scenarios, scaled down to 5 repetitions


def test_criterion_5_large_scenarios():
    out = {}
    for gen, alpha in (("top_rank", 2.0), ("rank_consistency", 5.0)):
        sc = Scenario(n=1000, n_star=50, N=50, alpha=alpha, iterations=75_000, generator=gen)
        res = run_benchmark(sc, methods=("lowbmm",), repetitions=5, seed=2024)
        out[gen] = (res.aggregate["lowbmm"]["coverage"]["mean"], max(r["wall_time_sec"] for r in res.rows))
    (p_top, t_top), (p_rc, t_rc) = out["top_rank"], out["rank_consistency"]
    record("5", p_top >= 0.90 and p_rc >= 0.40 and max(t_top, t_rc) <= 240,
           f"top-rank p = {p_top:.3f} (>= 0.90, ref 0.96), rank-consistency p = {p_rc:.3f} "
           f"(>= 0.40, ref 0.53), slowest run {max(t_top, t_rc):.1f} s (<= 240 s)")


# --------------------------------------------------------------------------
# 6. off-line alpha recovery


def test_criterion_6_alpha_recovery():
    t0 = time.perf_counter()
    found = {}
    for N, n in ((10, 20), (50, 150), (20, 1000)):
        n_star = round(n / 3)
        ds, _ = gen_top_rank(n, n_star, N, 3.0, seed=7)
        found[(N, n)] = estimate_alpha(ds, seed=1, n_star=n_star, workers=4).alpha_hat_nstar
    elapsed = time.perf_counter() - t0
    ok = all(1.9 <= v <= 2.5 for v in found.values()) and elapsed < 300
    record("6", ok, ", ".join(f"(N={N}, n={n}): {v:.3f}" for (N, n), v in found.items())
           + f" (all in [1.9, 2.5]); {elapsed:.1f} s (< 300 s)")


# --------------------------------------------------------------------------
# 7. robustness to noise


def _random_estimate_d_norm(n: int, n_star: int, draws: int = 4000) -> float:
    """Mean finite d_norm of a uniformly random selection and ordering."""
    rng = np.random.default_rng(0)
    truth = GroundTruth(np.arange(n_star), np.arange(1, n_star + 1))
    vals = []
    for _ in range(draws):
        a = np.sort(rng.choice(n, n_star, replace=False))
        rho = rng.permutation(n_star) + 1
        v = d_norm(truth, PosteriorSummary(a, a, rho, rho.astype(float)))
        if math.isfinite(v):
            vals.append(v)
    return float(np.mean(vals))


def test_criterion_7_noise_trend():
    # long chains: at alpha = 10 a 5000-step chain occasionally stays in a local mode
    p, d = [], []
    for level in range(5):
        sc = Scenario(n=20, n_star=8, N=25, alpha=10.0, iterations=200_000, noise_levels=level)
        a = run_benchmark(sc, methods=("lowbmm",), repetitions=10, seed=7).aggregate["lowbmm"]
        p.append(a["coverage"]["mean"])
        d.append(a["d_norm"]["mean"])
    random_level = _random_estimate_d_norm(20, 8)
    ok = (p[0] >= 0.95 and math.isfinite(d[4]) and d[4] >= d[0] and d[4] <= 0.5 * random_level
          and all(x >= y for x, y in zip(p, p[1:])) and all(x <= y for x, y in zip(d, d[1:])))
    record("7", ok, "p by level " + ", ".join(f"{v:.3f}" for v in p)
           + "; d_norm by level " + ", ".join(f"{v:.2f}" for v in d)
           + f"; level-4 d_norm <= half the random-guess level {random_level:.2f}; monotone trend")


# --------------------------------------------------------------------------
# 8. tuning directions


def test_criterion_8_tuning_directions():
    acc_set, acc_rho = {}, {}
    for L, l in itertools.product((1, 2, 3), (1, 2, 3)):
        rs, ss = [], []
        for seed in range(10):
            ds, _ = gen_top_rank(20, 8, 50, 3.0, seed=seed)
            s = run_chain(ds.rows, SamplerConfig(alpha=3.0, n_star=8, iterations=5000, swap_L=L, leap_l=l, seed=seed))
            rs.append(s.acceptance_rho)
            ss.append(s.acceptance_aset)
        acc_rho[L, l], acc_set[L, l] = np.mean(rs), np.mean(ss)
    set_by_L = [np.mean([acc_set[L, l] for l in (1, 2, 3)]) for L in (1, 2, 3)]
    rho_by_l = [np.mean([acc_rho[L, l] for L in (1, 2, 3)]) for l in (1, 2, 3)]
    ok = (set_by_L[0] > set_by_L[1] > set_by_L[2] and rho_by_l[0] > rho_by_l[2]
          and all(acc_rho[L, 1] > acc_rho[L, 3] for L in (1, 2, 3)))
    record("8", ok, "set acceptance L=1..3: " + ", ".join(f"{v:.4f}" for v in set_by_L)
           + "; rho acceptance l=1..3: " + ", ".join(f"{v:.4f}" for v in rho_by_l))


# --------------------------------------------------------------------------
# 9. invariant suite


def test_criterion_9_invariants(tmp_path):
    checks = {}
    rng = np.random.default_rng(9)

    data = np.array([rng.permutation(12) + 1 for _ in range(6)])
    s = run_chain(data, SamplerConfig(alpha=2.0, n_star=5, iterations=5000, swap_L=2, burn_in=0, thin=1, seed=3))
    checks["valid state after every transition"] = (
        len(s) == 5000 and all(is_permutation(r) for r in s.rho_draws)
        and all(np.unique(o).size == 5 and 0 <= o.min() and o.max() < 12 for o in s.orders))
    checks["sum of w_bar = n*"] = bool(np.isclose(selection_frequencies(s).sum(), 5))

    ok = True
    for m in range(1, 7):
        perms = oracles.all_perms(m)
        for a, b in itertools.product(perms[:30], perms[-30:]):
            ok &= footrule(a, b) == oracles.footrule(a, b) and kendall(a, b) == oracles.kendall(a, b)
        ok &= max_footrule(m) == oracles.max_footrule(m)
    checks["distances and max footrule vs brute force (m <= 6)"] = bool(ok)

    tvs = []
    for m in (3, 4, 5):
        rho = tuple(rng.permutation(m) + 1)
        draws = sample_mallows(np.array(rho), 1.5, 60_000, seed=m)
        tvs.append(oracles.total_variation(oracles.empirical(map(tuple, draws.tolist())),
                                           oracles.mallows_pmf(rho, 1.5)))
    checks[f"Mallows TV vs enumeration {max(tvs):.4f} <= 0.02"] = max(tvs) <= 0.02

    ds = RankingDataset(data, [f"x{i}" for i in range(12)])
    lio.write_dataset(tmp_path / "d.csv", ds)
    checks["CSV round trip"] = bool(np.array_equal(lio.read_dataset(tmp_path / "d.csv").rows, data))

    outs = []
    for k in range(2):
        argv = ["--seed", "5", "simulate", "--n", "15", "--n-star", "5", "--N", "8", "--alpha", "3",
                "-o", str(tmp_path / f"s{k}.csv"), "--truth", str(tmp_path / f"t{k}.json")]
        fit = ["--seed", "5", "fit", str(tmp_path / f"s{k}.csv"), "--alpha", "3", "--n-star", "5", "-M", "3000",
               "--draws", str(tmp_path / f"dr{k}.npz"), "--summary", str(tmp_path / f"f{k}.json")]
        assert main(argv) == 0 and main(fit) == 0
        outs.append(b"".join((tmp_path / f).read_bytes() for f in (f"s{k}.csv", f"t{k}.json", f"dr{k}.npz", f"f{k}.json")))
    checks["byte-identical reruns"] = outs[0] == outs[1]

    failed = [k for k, v in checks.items() if not v]
    record("9", not failed, "all hold: " + "; ".join(checks) if not failed else "failed: " + "; ".join(failed))


# --------------------------------------------------------------------------
# end-to-end pipeline on a large synthetic dataset


def _typed(row: dict) -> dict:
    out = {}
    for k, v in row.items():
        if v == "":
            out[k] = None
            continue
        for cast in (int, float):
            try:
                out[k] = cast(v)
                break
            except ValueError:
                continue
        else:
            out[k] = v
    return out


def test_criterion_pipeline_end_to_end(tmp_path, capsys):
    g = ["--seed", "11", "--threads", "4", "-q"]
    d, t = str(tmp_path / "d.csv"), str(tmp_path / "t.json")
    assert main([*g, "simulate", "--n", "2000", "--n-star", "20", "--N", "100", "--alpha", "3", "-o", d, "--truth", t]) == 0
    capsys.readouterr()
    assert main([*g, "estimate-alpha", d, "--reps", "1", "--n-star", "20", "-o", str(tmp_path / "g.csv"),
                 "--json", str(tmp_path / "a.json")]) == 0
    alpha = capsys.readouterr().out.strip()
    assert main([*g, "fit", d, "--alpha", alpha, "--n-star", "20", "-M", "20000", "--draws", str(tmp_path / "dr.npz")]) == 0
    tables = {"heatplot": "heatplot_row", "trace": "trace_row", "violin": "violin_row"}
    assert main([*g, "summarize", str(tmp_path / "dr.npz"), "--summary", str(tmp_path / "s.json"),
                 "--K", "10", "--c", "0.5", *itertools.chain.from_iterable(
                     (f"--{k}", str(tmp_path / f"{k}.csv")) for k in tables)]) == 0

    summary = json.loads((tmp_path / "s.json").read_text())
    lio.validate(summary, "summary")
    lio.validate(json.loads((tmp_path / "a.json").read_text()), "alpha")
    for name, schema in {**tables, "g": "alpha_grid_row"}.items():
        with open(tmp_path / f"{name}.csv", newline="") as fh:
            lio.validate_rows([_typed(r) for r in csv.DictReader(fh)], schema, limit=None)
    top = summary["top_selection"]["items"]
    record("pipeline", len(top) > 0,
           f"n=2000, N=100: alpha {float(alpha):.4g}, {len(top)} items selected with P(top-10) > 0.5, "
           "all exports valid against their schemas")
