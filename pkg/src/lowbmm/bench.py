"""Repeated simulate-fit-evaluate runs, aggregated per method."""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .datagen import apply_noise_swaps, gen_rank_consistency, gen_top_rank
from .metrics import borda, evaluate
from .postprocess import posterior_point_estimates
from .sampler import SamplerConfig, run_chain
from .seeding import derive_seed

GENERATORS = {"top_rank": gen_top_rank, "rank_consistency": gen_rank_consistency}
METHODS = ("lowbmm", "borda")
METRICS = ("coverage", "d_norm", "d_R", "d_norm_ranks", "d_R_ranks", "wall_time_sec")


@dataclass(frozen=True)
class Scenario:
    n: int
    n_star: int
    N: int
    alpha: float
    iterations: int = 1000
    generator: str = "top_rank"
    swap_L: int = 1
    leap_l: int | None = None
    burn_in: int | None = None
    thin: int | None = None
    hps_k: int | None = None
    noise_levels: int = 0
    noise_fraction: float = 0.9

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ValueError(f"generator must be one of {sorted(GENERATORS)}")

    def sampler_config(self, seed) -> SamplerConfig:
        return SamplerConfig(alpha=self.alpha, n_star=self.n_star, iterations=self.iterations,
                             swap_L=self.swap_L, leap_l=self.leap_l, burn_in=self.burn_in,
                             thin=self.thin, seed=seed)


@dataclass
class BenchResult:
    scenario: Scenario
    rows: list[dict]
    aggregate: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"scenario": asdict(self.scenario), "aggregate": self.aggregate}


def make_dataset(scenario: Scenario, seed):
    """The dataset and ground truth of one repetition."""
    s = scenario
    ds, truth = GENERATORS[s.generator](s.n, s.n_star, s.N, s.alpha, seed=derive_seed(seed, 0))
    if s.noise_levels:
        ds = apply_noise_swaps(ds, truth, s.noise_levels, s.noise_fraction, seed=derive_seed(seed, 2))
    return ds, truth


def _fit(method: str, ds, scenario: Scenario, seed):
    if method == "borda":
        return borda(ds.rows, scenario.n_star), {}
    if method == "lowbmm":
        samples = run_chain(ds.rows, scenario.sampler_config(derive_seed(seed, 1)))
        extra = {"acceptance_rho": samples.acceptance_rho, "acceptance_aset": samples.acceptance_aset}
        return posterior_point_estimates(samples, scenario.hps_k), extra
    raise ValueError(f"unknown method {method!r}")


def _one_rep(scenario: Scenario, methods, rep: int, seed) -> list[dict]:
    rep_seed = derive_seed(seed, rep)
    ds, truth = make_dataset(scenario, rep_seed)
    rows = []
    for method in methods:
        row = {"method": method, "rep": rep, "error": None}
        t0 = time.perf_counter()
        try:
            est, extra = _fit(method, ds, scenario, rep_seed)
            report = evaluate(truth, est, scenario.n, time.perf_counter() - t0)
            row.update(report.as_dict(), **extra)
        except Exception as exc:  # recorded, the benchmark goes on
            row.update({k: math.nan for k in METRICS}, n_corr=None,
                       error=f"{type(exc).__name__}: {exc}")
        rows.append(row)
    return rows


def aggregate(rows: list[dict], methods) -> dict:
    """Mean and standard deviation of each metric over successful repetitions."""
    out = {}
    for method in methods:
        ok = [r for r in rows if r["method"] == method and r["error"] is None]
        entry = {"repetitions": len(ok),
                 "failures": sum(r["method"] == method and r["error"] is not None for r in rows)}
        for key in METRICS:
            vals = np.array([r[key] for r in ok], dtype=float)
            if vals.size == 0:
                entry[key] = {"mean": None, "std": None}
                continue
            if not np.all(np.isfinite(vals)):
                std = None
            else:
                std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
            entry[key] = {"mean": float(vals.mean()), "std": std}
        out[method] = entry
    return out


def run_benchmark(scenario: Scenario, methods=METHODS, repetitions: int = 50, seed=None,
                  workers: int = 1) -> BenchResult:
    """Fresh dataset per repetition, every method fitted on it, metrics aggregated.

    Deterministic given ``seed`` regardless of ``workers``.
    """
    methods = tuple(methods)
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    with ThreadPoolExecutor(max(1, workers)) as pool:
        parts = list(pool.map(lambda r: _one_rep(scenario, methods, r, seed), range(repetitions)))
    rows = [row for part in parts for row in part]
    return BenchResult(scenario, rows, aggregate(rows, methods))
