"""Off-line choice of the fixed scale parameter by matching mean pairwise distances."""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .mallows import sample_mallows
from .perms import max_footrule
from .seeding import derive_seed

DEFAULT_GRID = tuple(np.logspace(-3, 2, 13))


@dataclass
class AlphaGridResult:
    grid: np.ndarray
    mean_dists: np.ndarray
    observed_mean: float
    alpha_hat_n: float
    alpha_hat_nstar: float | None = None

    def table(self) -> list[dict]:
        return [{"alpha0": float(a), "mean_distance": float(d), "observed_mean": self.observed_mean}
                for a, d in zip(self.grid, self.mean_dists)]


def _rows(data) -> np.ndarray:
    return np.asarray(getattr(data, "rows", data), dtype=np.int64)


def mean_pairwise_distance(data) -> float:
    """Footrule distance averaged over all ordered pairs of distinct assessors."""
    R = _rows(data)
    N = R.shape[0]
    if R.ndim != 2 or N < 2:
        raise ValueError("need at least two rankings")
    total = 0
    for j in range(N - 1):
        total += np.abs(R[j + 1:] - R[j]).sum()
    return 2.0 * total / (N * (N - 1))


def rescale_alpha(alpha_hat_n: float, n: int, n_star: int) -> float:
    """Carry an estimate from dimension ``n`` to ``n_star`` by matching the
    exponent ``alpha * d / m`` at maximal distance.  ``n_star = 1`` gives 0."""
    if not 1 <= n_star <= n:
        raise ValueError("need 1 <= n_star <= n")
    if not alpha_hat_n > 0:
        raise ValueError("alpha_hat_n must be positive")
    if n_star == n:
        return float(alpha_hat_n)
    if n_star == 1:
        warnings.warn("n_star = 1: a single item carries no ranking information, "
                      "the rescaled alpha is 0", RuntimeWarning, stacklevel=2)
    return alpha_hat_n * (n / n_star) * max_footrule(n_star) / max_footrule(n)


def _crossing(grid: np.ndarray, dists: np.ndarray, target: float) -> float | None:
    """First grid cell where the curve passes ``target``, linearly interpolated."""
    for i in range(len(grid) - 1):
        lo, hi = dists[i], dists[i + 1]
        if (lo - target) * (hi - target) <= 0:
            if lo == hi:  # flat cell sitting on the target
                return float(grid[i])
            t = (lo - target) / (lo - hi)
            return float(grid[i] + t * (grid[i + 1] - grid[i]))
    return None


def estimate_alpha(observed, grid=None, reps: int = 5, seed=None, *, n_star: int | None = None,
                   workers: int = 1, **mallows_kw) -> AlphaGridResult:
    """Estimate alpha in the dimension of ``observed`` and optionally rescale it.

    For every grid value, ``reps`` reference datasets of the observed shape
    are drawn from Mallows(identity, alpha0) and their mean pairwise
    distances averaged.  The estimate is where that curve crosses the
    observed mean pairwise distance.  When the observed value is not strictly
    inside the simulated range the corresponding grid end is returned and a
    warning is issued.

    Parameters
    ----------
    observed : RankingDataset or (N, n) array
    grid : sequence of float, optional
        Strictly ascending positive values; defaults to 13 log-spaced
        points on [1e-3, 1e2].
    reps : int
        Reference datasets per grid point.
    n_star : int, optional
        When given, ``alpha_hat_nstar`` is filled in via :func:`rescale_alpha`.
    workers : int
        Threads used over grid points; results do not depend on it.
    **mallows_kw
        Passed to :func:`lowbmm.mallows.sample_mallows` (burn_in, thin, leap).
    """
    R = _rows(observed)
    if R.ndim != 2 or R.shape[0] < 2:
        raise ValueError("need at least two observed rankings")
    grid = np.asarray(DEFAULT_GRID if grid is None else grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty sequence")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be positive and strictly ascending")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    N, n = R.shape
    identity = np.arange(1, n + 1)

    def point(i: int) -> float:
        return float(np.mean([
            mean_pairwise_distance(sample_mallows(identity, grid[i], N, derive_seed(seed, i, r), **mallows_kw))
            for r in range(reps)]))

    with ThreadPoolExecutor(max(1, workers)) as pool:
        dists = np.array(list(pool.map(point, range(grid.size))))
    observed_mean = mean_pairwise_distance(R)

    outside = observed_mean <= dists.min() or observed_mean >= dists.max()
    alpha = None if outside else _crossing(grid, dists, observed_mean)
    if alpha is None:
        # above every reference -> least concentrated end, below -> most
        alpha = float(grid[0] if observed_mean >= dists.max() else grid[-1])
        warnings.warn(f"observed mean distance {observed_mean:.4g} is outside the simulated "
                      f"range; alpha clamped to {alpha:.4g}", RuntimeWarning, stacklevel=2)
    nstar_hat = rescale_alpha(alpha, n, n_star) if n_star is not None else None
    return AlphaGridResult(grid, dists, observed_mean, alpha, nstar_hat)
