"""Permutation and ranking primitives.

A ranking is a 1-D integer array ``r`` where ``r[i]`` is the rank of item
``i`` (1 = most preferred).  Items are addressed by 0-based array index;
rank values are 1-based.  An item set is a 1-D array of distinct item
indices.
"""
from __future__ import annotations

import numpy as np


class DimensionError(ValueError):
    """Raised when two rankings (or a ranking and an item set) disagree in size."""


def as_ranking(r, name: str = "ranking") -> np.ndarray:
    """Return ``r`` as an int64 array, raising ``ValueError`` unless it is a
    permutation of ``1..len(r)``."""
    arr = np.asarray(r)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D sequence")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            raise ValueError(f"{name} must contain integers")
    arr = arr.astype(np.int64)
    if not is_permutation(arr):
        raise ValueError(f"{name} is not a permutation of 1..{arr.size}")
    return arr


def is_permutation(r) -> bool:
    arr = np.asarray(r)
    n = arr.size
    if arr.ndim != 1 or n == 0:
        return False
    if arr.min() < 1 or arr.max() > n:
        return False
    seen = np.zeros(n + 1, dtype=bool)
    seen[arr] = True
    return bool(seen[1:].all())


def rows_are_permutations(R: np.ndarray) -> np.ndarray:
    """Boolean mask over the rows of ``R`` marking valid permutations."""
    R = np.asarray(R)
    n = R.shape[1]
    ok = (R.min(axis=1) >= 1) & (R.max(axis=1) <= n)
    srt = np.sort(R, axis=1)
    ok &= np.all(srt == np.arange(1, n + 1), axis=1)
    return ok


def as_itemset(s, n: int) -> np.ndarray:
    """Validate an item set against ``n`` items; returns int64 indices in the given order."""
    arr = np.asarray(s, dtype=np.int64).ravel()
    if arr.size == 0 or arr.size > n:
        raise IndexError(f"item set size {arr.size} outside 1..{n}")
    if arr.min() < 0 or arr.max() >= n:
        raise IndexError(f"item indices must lie in 0..{n - 1}")
    if np.unique(arr).size != arr.size:
        raise IndexError("item set contains duplicates")
    return arr


def _check_same_length(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")


def footrule(a, b) -> int:
    """Spearman footrule distance ``sum_i |a_i - b_i|``."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    _check_same_length(a, b)
    return int(np.abs(a - b).sum())


def kendall(a, b) -> int:
    """Number of item pairs ordered differently by ``a`` and ``b``."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    _check_same_length(a, b)
    n = a.size
    if n < 2:
        return 0
    iu = np.triu_indices(n, k=1)
    da = np.sign(a[:, None] - a[None, :])[iu]
    db = np.sign(b[:, None] - b[None, :])[iu]
    return int(np.count_nonzero(da != db))


def rank_vector(x) -> np.ndarray:
    """Rank a score vector: smallest value gets rank 1.

    Ties are broken by ascending index so the result is always a
    permutation of ``1..len(x)``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("score vector must be non-empty and 1-D")
    if not np.all(np.isfinite(x)):
        raise ValueError("score vector must be finite")
    order = np.argsort(x, kind="stable")
    r = np.empty(x.size, dtype=np.int64)
    r[order] = np.arange(1, x.size + 1)
    return r


def rank_vector_ties(x) -> np.ndarray:
    """Literal counting rank ``r_i = #{j : x_j <= x_i}``; tied values share the larger rank."""
    x = np.asarray(x, dtype=float)
    srt = np.sort(x)
    return np.searchsorted(srt, x, side="right").astype(np.int64)


def restrict(r, s) -> np.ndarray:
    """Permutation of ``1..len(s)`` induced by ranking ``r`` on the items ``s``.

    The output is aligned with ``s``: entry ``k`` is the rank of item
    ``s[k]`` among the items of ``s``.
    """
    r = np.asarray(r, dtype=np.int64)
    s = as_itemset(s, r.size)
    return rank_vector(r[s])


def restrict_rows(R: np.ndarray, s) -> np.ndarray:
    """Row-wise :func:`restrict` for an ``(N, n)`` matrix of rankings."""
    R = np.asarray(R, dtype=np.int64)
    s = as_itemset(s, R.shape[1])
    sub = R[:, s]
    order = np.argsort(sub, axis=1, kind="stable")
    out = np.empty_like(sub)
    np.put_along_axis(out, order, np.arange(1, s.size + 1)[None, :].repeat(R.shape[0], 0), axis=1)
    return out


def max_footrule(m: int) -> int:
    """Largest footrule distance between two permutations of size ``m``.

    Attained by the reversal; equals ``floor(m**2 / 2)``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    return (m * m) // 2


def inverse(r) -> np.ndarray:
    """Ordering for a ranking: ``inverse(r)[k]`` is the 0-based item holding rank ``k + 1``."""
    r = np.asarray(r, dtype=np.int64)
    inv = np.empty_like(r)
    inv[r - 1] = np.arange(r.size)
    return inv
