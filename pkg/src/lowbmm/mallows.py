"""Mallows model with footrule distance: kernel evaluation and approximate sampling."""
from __future__ import annotations

import numpy as np

from . import _kernels
from .perms import as_ranking, footrule

BLOCK = 1 << 15


def log_kernel(r, rho, alpha: float) -> float:
    """Unnormalised log density ``-(alpha / m) * footrule(r, rho)``."""
    rho = np.asarray(rho)
    return -(alpha / rho.size) * footrule(r, rho)


def default_leap(m: int) -> int:
    return max(1, min(round(m / 5), m - 1)) if m > 1 else 1


def sample_mallows(
    rho,
    alpha: float,
    count: int,
    seed=None,
    *,
    burn_in: int | None = None,
    thin: int | None = None,
    leap: int | None = None,
) -> np.ndarray:
    """Draw ``count`` rankings from Mallows(``rho``, ``alpha``).

    A single Metropolis-Hastings chain with leap-and-shift proposals is
    started at ``rho``; the first ``burn_in`` steps are discarded and
    every ``thin``-th state afterwards is kept.

    Parameters
    ----------
    rho : array_like
        Consensus ranking of size m.
    alpha : float
        Positive scale parameter.
    count : int
        Number of rankings to return.
    seed : int, SeedSequence or Generator, optional
    burn_in, thin, leap : int, optional
        Defaults are ``100 m``, ``10 m`` and ``max(1, round(m / 5))``.

    Returns
    -------
    ndarray of shape (count, m)
    """
    rho = as_ranking(rho, "rho")
    m = rho.size
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if count < 1:
        raise ValueError("count must be >= 1")
    burn_in = 100 * m if burn_in is None else int(burn_in)
    thin = 10 * m if thin is None else int(thin)
    leap = default_leap(m) if leap is None else int(leap)
    if burn_in < 0 or thin < 1 or leap < 1:
        raise ValueError("need burn_in >= 0, thin >= 1, leap >= 1")
    rng = np.random.default_rng(seed)

    r = rho.copy()
    inv = np.zeros(m + 1, dtype=np.int64)
    inv[r] = np.arange(m)
    out = np.empty((count, m), dtype=np.int64)
    total = burn_in + count * thin
    step, n_out = 0, 0
    while step < total:
        b = min(BLOCK, total - step)
        u = rng.random((b, 3))
        n_out, _ = _kernels.mallows_block(r, inv, rho, float(alpha), leap, u, step,
                                          burn_in, thin, out, n_out)
        step += b
    return out
