"""Experiment configuration files (YAML or JSON) for the command line."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .bench import GENERATORS, METHODS, Scenario


class ConfigFileError(ValueError):
    pass


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigFileError(msg)


def _positive_int(name, v, lo=1):
    _require(isinstance(v, int) and not isinstance(v, bool) and v >= lo, f"{name} must be an integer >= {lo}")


def _opt_int(name, v, lo=1):
    if v is not None:
        _positive_int(name, v, lo)


def _positive(name, v):
    _require(isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0, f"{name} must be a positive number")


@dataclass
class SimulateSection:
    generator: str = "top_rank"
    n: int = 20
    n_star: int = 8
    N: int = 50
    alpha: float = 10.0
    noise_levels: int = 0
    noise_fraction: float = 0.9

    def check(self):
        _require(self.generator in GENERATORS, f"simulate.generator must be one of {sorted(GENERATORS)}")
        _positive_int("simulate.n", self.n, 2)
        _positive_int("simulate.n_star", self.n_star)
        _require(self.n_star < self.n, "simulate.n_star must be < simulate.n")
        _positive_int("simulate.N", self.N)
        _positive("simulate.alpha", self.alpha)
        _positive_int("simulate.noise_levels", self.noise_levels, 0)
        _require(self.noise_levels <= self.n_star, "simulate.noise_levels must be <= n_star")
        _require(0 <= self.noise_fraction <= 1, "simulate.noise_fraction must lie in [0, 1]")


@dataclass
class FitSection:
    alpha: float | None = None
    n_star: int | None = None
    iterations: int = 10_000
    swap_L: int = 1
    leap_l: int | None = None
    burn_in: int | None = None
    thin: int | None = None
    progress_every: int = 0
    from_scores: bool = False

    def check(self):
        if self.alpha is not None:
            _positive("fit.alpha", self.alpha)
        _opt_int("fit.n_star", self.n_star)
        _positive_int("fit.iterations", self.iterations)
        _positive_int("fit.swap_L", self.swap_L)
        _opt_int("fit.leap_l", self.leap_l)
        _opt_int("fit.burn_in", self.burn_in, 0)
        _opt_int("fit.thin", self.thin)
        _positive_int("fit.progress_every", self.progress_every, 0)


@dataclass
class AlphaSection:
    grid: list | None = None
    reps: int = 5
    n_star: int | None = None
    from_scores: bool = False

    def check(self):
        if self.grid is not None:
            _require(isinstance(self.grid, list) and len(self.grid) > 0, "alpha.grid must be a nonempty list")
            for v in self.grid:
                _positive("alpha.grid entries", v)
            _require(all(a < b for a, b in zip(self.grid, self.grid[1:])), "alpha.grid must be strictly ascending")
        _positive_int("alpha.reps", self.reps)
        _opt_int("alpha.n_star", self.n_star)


@dataclass
class SummarizeSection:
    k: int | None = None
    K: int | None = None
    c: float | None = None
    Ks: list | None = None
    top: int = 15
    floor: float = 0.0

    def check(self):
        _opt_int("summarize.k", self.k)
        _opt_int("summarize.K", self.K)
        if self.c is not None:
            _require(isinstance(self.c, (int, float)) and 0 <= self.c <= 1, "summarize.c must lie in [0, 1]")
        _require((self.K is None) == (self.c is None), "summarize.K and summarize.c go together")
        if self.Ks is not None:
            _require(isinstance(self.Ks, list) and self.Ks, "summarize.Ks must be a nonempty list")
            for v in self.Ks:
                _positive_int("summarize.Ks entries", v)
        _positive_int("summarize.top", self.top)
        _require(0 <= self.floor <= 1, "summarize.floor must lie in [0, 1]")


@dataclass
class BenchSection:
    scenarios: list = field(default_factory=list)
    methods: list = field(default_factory=lambda: list(METHODS))
    repetitions: int = 50
    timing: bool = False

    def check(self):
        _positive_int("bench.repetitions", self.repetitions)
        _require(isinstance(self.methods, list) and self.methods, "bench.methods must be a nonempty list")
        for m in self.methods:
            _require(m in METHODS, f"bench.methods entries must be among {list(METHODS)}")
        self.scenarios = [s if isinstance(s, Scenario) else scenario_from_mapping(s, f"bench.scenarios[{i}]")
                          for i, s in enumerate(self.scenarios)]


@dataclass
class ExperimentConfig:
    seed: int | None = None
    chains: int = 1
    threads: int = 1
    simulate: SimulateSection = field(default_factory=SimulateSection)
    fit: FitSection = field(default_factory=FitSection)
    alpha: AlphaSection = field(default_factory=AlphaSection)
    summarize: SummarizeSection = field(default_factory=SummarizeSection)
    bench: BenchSection = field(default_factory=BenchSection)

    def check(self):
        if self.seed is not None:
            _require(isinstance(self.seed, int) and not isinstance(self.seed, bool) and 0 <= self.seed < 2**64,
                     "seed must be an integer in [0, 2^64)")
        _positive_int("chains", self.chains)
        _positive_int("threads", self.threads)
        for sec in (self.simulate, self.fit, self.alpha, self.summarize, self.bench):
            sec.check()
        return self


SECTIONS = {"simulate": SimulateSection, "fit": FitSection, "alpha": AlphaSection,
            "summarize": SummarizeSection, "bench": BenchSection}


def _build(cls, mapping, where: str):
    _require(isinstance(mapping, dict), f"{where or 'config'} must be a mapping")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(mapping) - names)
    _require(not unknown, f"unknown key(s) in {where or 'config'}: {', '.join(map(str, unknown))}")
    return cls(**mapping)


def scenario_from_mapping(mapping, where: str = "scenario") -> Scenario:
    try:
        sc = _build(Scenario, mapping, where)
    except TypeError as exc:  # missing required fields
        raise ConfigFileError(f"{where}: {exc}") from None
    except ValueError as exc:
        raise ConfigFileError(f"{where}: {exc}") from None
    _positive_int(f"{where}.n", sc.n, 2)
    _positive_int(f"{where}.n_star", sc.n_star)
    _require(sc.n_star < sc.n, f"{where}.n_star must be < n")
    _positive_int(f"{where}.N", sc.N)
    _positive(f"{where}.alpha", sc.alpha)
    _positive_int(f"{where}.iterations", sc.iterations)
    return sc


def from_mapping(mapping: dict) -> ExperimentConfig:
    mapping = dict(mapping or {})
    top = {k: v for k, v in mapping.items() if k not in SECTIONS}
    cfg = _build(ExperimentConfig, top, "")
    for name, cls in SECTIONS.items():
        if name in mapping:
            setattr(cfg, name, _build(cls, mapping[name] or {}, name))
    return cfg.check()


def load_config(path) -> ExperimentConfig:
    """Read a YAML (or JSON, which YAML accepts) configuration file."""
    text = Path(path).read_text()
    try:
        data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigFileError(f"{path}: cannot parse ({exc})") from None
    return from_mapping(data)


def override(section, **values):
    """Copy of ``section`` with every non-None value replaced, re-checked."""
    new = replace(section, **{k: v for k, v in values.items() if v is not None})
    new.check()
    return new
