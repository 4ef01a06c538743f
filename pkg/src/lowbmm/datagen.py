"""Synthetic ranking datasets: top-rank and rank-consistency processes, noise swaps."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .mallows import sample_mallows
from .perms import rows_are_permutations
from .seeding import derive_seed


@dataclass
class RankingDataset:
    """``rows[j, i]`` is the rank assessor ``j`` gives item ``i``."""

    rows: np.ndarray
    item_ids: list[str]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        if self.rows.ndim != 2 or self.rows.shape[0] < 1:
            raise ValueError("rows must be an (N, n) matrix with N >= 1")
        if len(self.item_ids) != self.rows.shape[1]:
            raise ValueError("item_ids length does not match the number of columns")
        bad = np.flatnonzero(~rows_are_permutations(self.rows))
        if bad.size:
            raise ValueError(f"row {bad[0] + 1} is not a permutation of 1..{self.rows.shape[1]}")

    @property
    def N(self) -> int:
        return self.rows.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[1]


@dataclass
class GroundTruth:
    """True relevant items (sorted) and their consensus ranks, aligned."""

    true_set: np.ndarray
    true_consensus: np.ndarray

    @property
    def n_star(self) -> int:
        return len(self.true_set)

    def ordering(self) -> np.ndarray:
        """Relevant items listed from rank 1 to rank n*."""
        out = np.empty(self.n_star, dtype=np.int64)
        out[np.asarray(self.true_consensus) - 1] = self.true_set
        return out


def default_item_ids(n: int) -> list[str]:
    width = len(str(n))
    return [f"item{i + 1:0{width}d}" for i in range(n)]


def _check_dims(n, n_star, N, alpha):
    if not 1 <= n_star < n:
        raise ValueError(f"need 1 <= n_star < n, got n_star={n_star}, n={n}")
    if N < 1:
        raise ValueError("N must be >= 1")
    if not alpha > 0:
        raise ValueError("alpha must be positive")


def _setup(n, n_star, N, alpha, seed):
    _check_dims(n, n_star, N, alpha)
    rng = np.random.default_rng(derive_seed(seed, 0))
    relevant = rng.permutation(n)[:n_star]  # relevant[k] holds true rank k + 1
    sigma = sample_mallows(np.arange(1, n_star + 1), alpha, N, derive_seed(seed, 1))
    order = np.argsort(relevant)
    truth = GroundTruth(relevant[order], (order + 1).astype(np.int64))
    return rng, relevant, sigma, truth


def gen_top_rank(n: int, n_star: int, N: int, alpha: float, seed=None):
    """Relevant items take ranks 1..n* following Mallows((1..n*), alpha);
    the rest take ranks n*+1..n uniformly at random.

    Returns ``(RankingDataset, GroundTruth)``.
    """
    rng, relevant, sigma, truth = _setup(n, n_star, N, alpha, seed)
    mask = np.ones(n, dtype=bool)
    mask[relevant] = False
    others = np.flatnonzero(mask)
    rows = np.empty((N, n), dtype=np.int64)
    for j in range(N):
        rows[j, relevant] = sigma[j]
        rows[j, others] = n_star + 1 + rng.permutation(n - n_star)
    prov = {"generator": "top_rank", "n": n, "n_star": n_star, "N": N, "alpha": alpha, "seed": seed}
    return RankingDataset(rows, default_item_ids(n), prov), truth


def gen_rank_consistency(n: int, n_star: int, N: int, alpha: float, seed=None):
    """Relevant items keep a Mallows-distributed relative order but occupy
    uniformly random absolute positions; the rest fill the gaps at random.

    Returns ``(RankingDataset, GroundTruth)``.
    """
    rng, relevant, sigma, truth = _setup(n, n_star, N, alpha, seed)
    mask = np.ones(n, dtype=bool)
    mask[relevant] = False
    others = np.flatnonzero(mask)
    rows = np.empty((N, n), dtype=np.int64)
    for j in range(N):
        positions = np.sort(rng.choice(n, n_star, replace=False)) + 1
        rows[j, relevant] = positions[sigma[j] - 1]
        free = np.ones(n + 1, dtype=bool)
        free[0] = False
        free[positions] = False
        rows[j, others] = rng.permutation(np.flatnonzero(free))
    prov = {"generator": "rank_consistency", "n": n, "n_star": n_star, "N": N, "alpha": alpha, "seed": seed}
    return RankingDataset(rows, default_item_ids(n), prov), truth


def apply_noise_swaps(ds: RankingDataset, truth: GroundTruth, levels: int,
                      fraction: float = 0.9, seed=None) -> RankingDataset:
    """Perturb the relevant items from the bottom of the true consensus upward.

    At level ``i`` the item with true rank ``n* - i + 1`` swaps its rank
    with a uniformly chosen non-relevant item, for a random ``fraction`` of
    the assessors (a fresh partner per assessor).
    """
    n_star = truth.n_star
    if not 0 <= levels <= n_star:
        raise ValueError(f"levels must lie in 0..{n_star}")
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    rows = ds.rows.copy()
    rng = np.random.default_rng(seed)
    order = truth.ordering()
    mask = np.ones(ds.n, dtype=bool)
    mask[truth.true_set] = False
    outside = np.flatnonzero(mask)
    k = int(round(fraction * ds.N))
    for level in range(1, levels + 1):
        item = order[n_star - level]
        who = rng.choice(ds.N, k, replace=False)
        partners = outside[rng.integers(0, outside.size, size=k)]
        a = rows[who, item].copy()
        rows[who, item] = rows[who, partners]
        rows[who, partners] = a
    prov = {**ds.provenance, "noise_levels": levels, "noise_fraction": fraction, "noise_seed": seed}
    return replace(ds, rows=rows, provenance=prov)
