"""Metropolis-Hastings inference for the lower-dimensional Bayesian Mallows model.

The chain state is a relevant-item set ``aset`` (n* item indices, sorted)
and a consensus ``rho`` aligned with it (``rho[k]`` is the rank of item
``aset[k]``).  Each iteration performs a leap-and-shift update of ``rho``
followed by a swap update of ``aset``.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from . import _kernels
from .perms import restrict_rows, rows_are_permutations
from .seeding import derive_seed

log = logging.getLogger(__name__)

BLOCK = 1 << 14


class ConfigError(ValueError):
    """Invalid sampler configuration."""


@dataclass(frozen=True)
class SamplerConfig:
    """Tuning knobs of the lowBMM chain.

    ``leap_l``, ``burn_in`` and ``thin`` default to ``round(n_star / 5)``,
    ``iterations // 5`` and 1 (10 when ``iterations > 1e5``).
    """

    alpha: float
    n_star: int
    iterations: int
    swap_L: int = 1
    leap_l: int | None = None
    burn_in: int | None = None
    thin: int | None = None
    seed: int | None = None
    trace: bool = False

    def resolved(self) -> "SamplerConfig":
        n_star, M = int(self.n_star), int(self.iterations)
        leap = self.leap_l
        if leap is None:
            leap = max(1, min(round(n_star / 5), n_star - 1))
        burn = M // 5 if self.burn_in is None else self.burn_in
        thin = self.thin if self.thin is not None else (1 if M <= 100_000 else 10)
        return SamplerConfig(float(self.alpha), n_star, M, int(self.swap_L), int(leap),
                             int(burn), int(thin), self.seed, self.trace)

    def validate(self, n: int) -> None:
        c = self
        if not (c.alpha > 0 and math.isfinite(c.alpha)):
            raise ConfigError("alpha must be a positive finite number")
        if not 1 <= c.n_star < n:
            raise ConfigError(f"n_star must satisfy 1 <= n_star < n (n={n})")
        if not 1 <= c.swap_L <= min(c.n_star, n - c.n_star):
            raise ConfigError(f"swap_L must lie in 1..{min(c.n_star, n - c.n_star)}")
        if not 1 <= c.leap_l <= max(1, c.n_star - 1):
            raise ConfigError(f"leap_l must lie in 1..{max(1, c.n_star - 1)}")
        if c.iterations < 1 or c.thin < 1 or not 0 <= c.burn_in < c.iterations:
            raise ConfigError("need iterations >= 1, thin >= 1 and 0 <= burn_in < iterations")


@dataclass
class PosteriorSamples:
    """Stored post-burn-in draws.

    ``orders[m, k]`` is the item holding rank ``k + 1`` in draw ``m``; this
    encodes both the set and the consensus of the draw.
    """

    orders: np.ndarray
    iterations: np.ndarray
    n: int
    acceptance_rho: float
    acceptance_aset: float
    config: dict = field(default_factory=dict)
    chain: np.ndarray | None = None
    trace: np.ndarray | None = None

    def __post_init__(self):
        if self.chain is None:
            self.chain = np.zeros(len(self.orders), dtype=np.int64)

    @property
    def n_star(self) -> int:
        return self.orders.shape[1]

    def __len__(self) -> int:
        return self.orders.shape[0]

    @property
    def aset_draws(self) -> np.ndarray:
        return np.sort(self.orders, axis=1)

    @property
    def rho_draws(self) -> np.ndarray:
        """Ranks aligned with :attr:`aset_draws`."""
        return np.argsort(self.orders, axis=1, kind="stable") + 1

    def indicator_matrix(self) -> np.ndarray:
        """The draws-by-items 0/1 selection matrix."""
        W = np.zeros((len(self), self.n), dtype=np.int8)
        np.put_along_axis(W, self.orders, 1, axis=1)
        return W


# --------------------------------------------------------------------------
# single-step operations


def leap_and_shift_propose(rho, l: int, rng: np.random.Generator):
    """Leap-and-shift proposal on a ranking.

    A rank position is drawn uniformly (equivalently an item), its item is
    moved to a rank at most ``l`` away and the items in between shift by one.

    Returns
    -------
    rho_prime, log_forward, log_backward
    """
    rho = np.asarray(rho, dtype=np.int64)
    m = rho.size
    u_pick, u_target = rng.random(), rng.random()
    if m < 2:
        return rho.copy(), 0.0, 0.0
    old = min(int(u_pick * m) + 1, m)
    t = _kernels.leap_target(old, m, l, u_target)
    prime = rho.copy()
    if t > old:
        prime[(rho > old) & (rho <= t)] -= 1
    else:
        prime[(rho >= t) & (rho < old)] += 1
    prime[rho == old] = t
    lf, lb = _kernels.leap_log_masses(old, t, m, l)
    return prime, lf, lb


def accept_rho(rho, rho_prime, log_forward, log_backward, restricted, alpha, rng):
    """Metropolis-Hastings acceptance for a consensus proposal.

    ``restricted`` is the ``(N, n*)`` matrix of data rankings restricted to
    the current set, columns aligned with ``rho``.  Returns the accepted
    ranking and whether the proposal was taken.
    """
    u = rng.random()
    n_star = restricted.shape[1]
    d_new = int(np.abs(restricted - np.asarray(rho_prime)).sum())
    d_old = int(np.abs(restricted - np.asarray(rho)).sum())
    ratio = math.exp((log_backward - log_forward) - (alpha / n_star) * (d_new - d_old))
    if u < ratio:
        return np.asarray(rho_prime), True
    return np.asarray(rho), False


def propose_aset(aset, rho, n: int, L: int, rng: np.random.Generator):
    """Swap ``L`` random members of ``aset`` with ``L`` random non-members.

    Retained items keep their ranks; the vacated ranks are handed to the
    incoming items in random order.  Returns ``(aset_prop, rho_prop)``
    sorted by item index.
    """
    aset = np.asarray(aset, dtype=np.int64)
    rho = np.asarray(rho, dtype=np.int64)
    n_star = aset.size
    if not 1 <= L <= min(n_star, n - n_star):
        raise ValueError(f"L must lie in 1..{min(n_star, n - n_star)}")
    u_out = rng.random(L)
    u_in = rng.random(L)
    ranks_left = list(range(1, n_star + 1))
    out_ranks = [ranks_left.pop(min(int(u * (n_star - i)), n_star - i - 1))
                 for i, u in enumerate(u_out)]
    mask = np.ones(n, dtype=bool)
    mask[aset] = False
    outside = list(np.flatnonzero(mask))
    m_out = len(outside)
    incoming = [outside.pop(min(int(u * (m_out - i)), m_out - i - 1))
                for i, u in enumerate(u_in)]
    item_rank = dict(zip(aset.tolist(), rho.tolist()))
    by_rank = {r: i for i, r in item_rank.items()}
    for r, b in zip(out_ranks, incoming):
        del item_rank[by_rank[r]]
        item_rank[int(b)] = r
    new_set = np.array(sorted(item_rank), dtype=np.int64)
    new_rho = np.array([item_rank[i] for i in new_set], dtype=np.int64)
    return new_set, new_rho


def accept_aset(aset, aset_prop, rho, rho_prop, data, alpha, rng):
    """Metropolis-Hastings acceptance for a set proposal (symmetric proposal).

    Returns ``(aset, rho, accepted)``.
    """
    u = rng.random()
    n_star = len(aset)
    d_old = set_distance(data, aset, rho)
    d_new = set_distance(data, aset_prop, rho_prop)
    if u < math.exp(-(alpha / n_star) * (d_new - d_old)):
        return np.asarray(aset_prop), np.asarray(rho_prop), True
    return np.asarray(aset), np.asarray(rho), False


def set_distance(data, aset, rho) -> int:
    """Total footrule ``sum_j d(R_j | aset, rho)`` over all assessors."""
    return int(np.abs(restrict_rows(data, aset) - np.asarray(rho)[None, :]).sum())


def log_posterior(data, aset, rho, alpha) -> float:
    """Unnormalised log posterior of ``(rho, aset)``."""
    return -(alpha / len(aset)) * set_distance(data, aset, rho)


# --------------------------------------------------------------------------
# chains


def _check_data(data) -> np.ndarray:
    R = np.asarray(data, dtype=np.int64)
    if R.ndim != 2 or R.shape[0] < 1:
        raise ConfigError("data must be an (N, n) matrix with N >= 1")
    bad = np.flatnonzero(~rows_are_permutations(R))
    if bad.size:
        raise ConfigError(f"row {bad[0] + 1} is not a permutation of 1..{R.shape[1]}")
    return R


def _initial_state(rng, n, n_star):
    aset = np.sort(rng.choice(n, n_star, replace=False)).astype(np.int64)
    rho = (rng.permutation(n_star) + 1).astype(np.int64)
    return aset, rho


def config_hash(cfg: SamplerConfig, data: np.ndarray) -> str:
    h = hashlib.sha256(json.dumps(asdict(cfg), sort_keys=True).encode())
    h.update(np.ascontiguousarray(data, dtype=np.int64).tobytes())
    return h.hexdigest()[:16]


def run_chain(
    data,
    cfg: SamplerConfig,
    *,
    on_block: Callable[[np.ndarray, np.ndarray], None] | None = None,
    keep: bool = True,
    progress_every: int = 0,
    debug: bool = False,
) -> PosteriorSamples:
    """Run one lowBMM chain.

    Parameters
    ----------
    data : (N, n) array of rankings.
    cfg : SamplerConfig
    on_block : callable, optional
        Receives ``(orders, iterations)`` for every batch of stored draws, e.g.
        to stream them to disk.
    keep : bool
        Keep draws in memory.  With ``keep=False`` the returned samples are empty.
    progress_every : int
        Log a progress line every this many iterations (0 disables).
    debug : bool
        Use the pure-Python reference implementation (full distance
        recomputation, state assertions after every step).
    """
    R = _check_data(data)
    cfg = cfg.resolved()
    cfg.validate(R.shape[1])
    if debug:
        return run_chain_reference(R, cfg)
    N, n = R.shape
    n_star, L, M = cfg.n_star, cfg.swap_L, cfg.iterations
    rng = np.random.default_rng(cfg.seed)
    aset, rho = _initial_state(rng, n, n_star)

    RT = np.ascontiguousarray(R.T)
    inv = np.zeros(n_star + 1, dtype=np.int64)
    inv[rho] = np.arange(n_star)
    rr = _kernels.restricted_ranks(RT, aset)
    dist = np.array([_kernels.distance_total(RT, aset, rho, rr)], dtype=np.int64)
    outside = np.ones(n, dtype=np.bool_)
    outside[aset] = False
    tree = _kernels.fenwick_build(outside)
    counts = np.zeros(4, dtype=np.int64)
    trace = np.empty(M if cfg.trace else 0, dtype=np.int64)

    n_keep = (M - cfg.burn_in) // cfg.thin
    kept_orders, kept_iters = [], []
    width = 4 + 2 * L
    done = 0
    next_report = progress_every
    while done < M:
        b = min(BLOCK, M - done)
        u = rng.random((b, width))
        cap = b // cfg.thin + 1
        orders = np.empty((cap, n_star), dtype=np.int64)
        iters = np.empty(cap, dtype=np.int64)
        got = _kernels.lowbmm_block(RT, aset, rho, inv, rr, dist, tree, cfg.alpha,
                                    cfg.leap_l, L, u, done, cfg.burn_in, cfg.thin,
                                    orders, iters, 0, trace, counts)
        done += b
        if got:
            if on_block is not None:
                on_block(orders[:got], iters[:got])
            if keep:
                kept_orders.append(orders[:got].copy())
                kept_iters.append(iters[:got].copy())
        if progress_every and done >= next_report:
            log.info("iteration %d/%d  acc(rho)=%.3f acc(A)=%.3f", done, M,
                     counts[1] / max(counts[0], 1), counts[3] / max(counts[2], 1))
            next_report += progress_every

    if keep:
        orders = np.concatenate(kept_orders) if kept_orders else np.empty((0, n_star), np.int64)
        iters = np.concatenate(kept_iters) if kept_iters else np.empty(0, np.int64)
        assert len(orders) == n_keep
    else:
        orders, iters = np.empty((0, n_star), np.int64), np.empty(0, np.int64)
    return PosteriorSamples(
        orders=orders,
        iterations=iters,
        n=n,
        acceptance_rho=counts[1] / counts[0] if counts[0] else 0.0,
        acceptance_aset=counts[3] / counts[2] if counts[2] else 0.0,
        config={**asdict(cfg), "hash": config_hash(cfg, R)},
        trace=trace if cfg.trace else None,
    )


def run_chain_reference(data, cfg: SamplerConfig) -> PosteriorSamples:
    """Slow reference chain built from the single-step operations.

    Consumes the random stream exactly like :func:`run_chain`, so for equal
    seeds both produce identical draws.
    """
    R = _check_data(data)
    cfg = cfg.resolved()
    N, n = R.shape
    cfg.validate(n)
    n_star, L = cfg.n_star, cfg.swap_L
    rng = np.random.default_rng(cfg.seed)
    aset, rho = _initial_state(rng, n, n_star)
    orders, iters, trace = [], [], []
    acc = np.zeros(4, dtype=np.int64)
    for it in range(1, cfg.iterations + 1):
        if n_star > 1:
            prime, lf, lb = leap_and_shift_propose(rho, cfg.leap_l, rng)
            rho, ok = accept_rho(rho, prime, lf, lb, restrict_rows(R, aset), cfg.alpha, rng)
            acc[0] += 1
            acc[1] += ok
        else:
            rng.random(3)
        set_prop, rho_prop = propose_aset(aset, rho, n, L, rng)
        aset, rho, ok = accept_aset(aset, set_prop, rho, rho_prop, R, cfg.alpha, rng)
        acc[2] += 1
        acc[3] += ok
        assert len(set(aset.tolist())) == n_star and np.array_equal(np.sort(rho), np.arange(1, n_star + 1))
        if cfg.trace:
            trace.append(set_distance(R, aset, rho))
        if it > cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
            order = np.empty(n_star, dtype=np.int64)
            order[rho - 1] = aset
            orders.append(order)
            iters.append(it)
    return PosteriorSamples(
        orders=np.array(orders, dtype=np.int64).reshape(-1, n_star),
        iterations=np.array(iters, dtype=np.int64),
        n=n,
        acceptance_rho=acc[1] / acc[0] if acc[0] else 0.0,
        acceptance_aset=acc[3] / acc[2],
        config={**asdict(cfg), "hash": config_hash(cfg, R)},
        trace=np.array(trace, dtype=np.int64) if cfg.trace else None,
    )


def run_chains(data, cfg: SamplerConfig, chains: int = 1, workers: int = 1, **kwargs) -> PosteriorSamples:
    """Run independent chains with derived seeds and merge their stored draws."""
    if chains < 1:
        raise ConfigError("chains must be >= 1")
    if chains == 1:
        return run_chain(data, cfg, **kwargs)
    cfgs = [replace(cfg, seed=derive_seed(cfg.seed, c)) for c in range(chains)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda c: run_chain(data, c, **kwargs), cfgs))
    else:
        parts = [run_chain(data, c, **kwargs) for c in cfgs]
    merged = merge_samples(parts, cfg)
    merged.config["hash"] = config_hash(cfg.resolved(), _check_data(data))
    return merged


def merge_samples(parts: list[PosteriorSamples], cfg: SamplerConfig | None = None) -> PosteriorSamples:
    orders = np.concatenate([p.orders for p in parts])
    iters = np.concatenate([p.iterations for p in parts])
    chain = np.concatenate([np.full(len(p), c, dtype=np.int64) for c, p in enumerate(parts)])
    weights = np.array([max(len(p), 1) for p in parts], dtype=float)
    config = dict(parts[0].config)
    config["chains"] = len(parts)
    if cfg is not None:
        config["seed"] = cfg.seed
    return PosteriorSamples(
        orders=orders,
        iterations=iters,
        n=parts[0].n,
        acceptance_rho=float(np.average([p.acceptance_rho for p in parts], weights=weights)),
        acceptance_aset=float(np.average([p.acceptance_aset for p in parts], weights=weights)),
        config=config,
        chain=chain,
    )
