"""Posterior summaries of lowBMM draws."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .perms import rank_vector
from .sampler import PosteriorSamples


class EmptySamplesError(ValueError):
    pass


@dataclass
class PosteriorSummary:
    """Point estimates.  ``a_hat`` is sorted; ``rho_hat`` is aligned with it.

    ``x_bar`` holds the conditional mean rank of every item of ``hps``.
    """

    hps: np.ndarray
    a_hat: np.ndarray
    rho_hat: np.ndarray
    x_bar: np.ndarray

    def ordering(self) -> np.ndarray:
        out = np.empty(len(self.a_hat), dtype=np.int64)
        out[self.rho_hat - 1] = self.a_hat
        return out


def _require_draws(samples: PosteriorSamples) -> None:
    if len(samples) == 0:
        raise EmptySamplesError("no stored draws")


def inclusion_counts(samples: PosteriorSamples) -> np.ndarray:
    _require_draws(samples)
    return np.bincount(samples.orders.ravel(), minlength=samples.n)


def selection_frequencies(samples: PosteriorSamples) -> np.ndarray:
    """Fraction of draws whose set contains each item (length n, sums to n*)."""
    return inclusion_counts(samples) / len(samples)


def rank_sums(samples: PosteriorSamples) -> np.ndarray:
    ranks = np.broadcast_to(np.arange(1, samples.n_star + 1), samples.orders.shape)
    return np.bincount(samples.orders.ravel(), weights=ranks.ravel(), minlength=samples.n)


def highest_probability_set(w_bar, k: int, n_star: int | None = None) -> np.ndarray:
    """The ``k`` items with the largest selection frequency, ties by lower index.

    Returned sorted by item index.
    """
    w = np.asarray(w_bar, dtype=float)
    n = w.size
    lo = 1 if n_star is None else n_star
    if not lo <= k <= n:
        raise ValueError(f"k must lie in {lo}..{n}")
    order = np.lexsort((np.arange(n), -w))
    return np.sort(order[:k])


def default_k(w_bar, n_star: int) -> int:
    """Every item selected at least once."""
    return max(n_star, int(np.count_nonzero(np.asarray(w_bar) > 0)))


def posterior_point_estimates(samples: PosteriorSamples, k: int | None = None) -> PosteriorSummary:
    """HPS, selected set and consensus estimate from conditional mean ranks."""
    w = selection_frequencies(samples)
    n_star = samples.n_star
    if k is None:
        k = default_k(w, n_star)
    hps = highest_probability_set(w, k, n_star)
    counts = inclusion_counts(samples)[hps]
    if np.any(counts == 0):
        raise ValueError(
            f"{int(np.sum(counts == 0))} HPS items were never selected; "
            f"choose k <= {int(np.count_nonzero(w > 0))}")
    x_bar = rank_sums(samples)[hps] / counts
    pick = np.lexsort((hps, x_bar))[:n_star]
    a_hat = np.sort(hps[pick])
    rho_hat = rank_vector(x_bar[np.searchsorted(hps, a_hat)])
    return PosteriorSummary(hps=hps, a_hat=a_hat, rho_hat=rho_hat, x_bar=x_bar)


def topk_inclusion_probabilities(samples: PosteriorSamples, K: int) -> np.ndarray:
    """Per item, the fraction of the draws containing it in which its rank is <= K.

    Items never selected get NaN.
    """
    if not 1 <= K <= samples.n_star:
        raise ValueError(f"K must lie in 1..{samples.n_star}")
    counts = inclusion_counts(samples)
    top = np.bincount(samples.orders[:, :K].ravel(), minlength=samples.n)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, top / np.maximum(counts, 1), np.nan)


def top_probability_selection(samples: PosteriorSamples, K: int, c: float,
                              summary: PosteriorSummary | None = None) -> np.ndarray:
    """Items of the selected set whose top-K probability exceeds ``c``."""
    if not 0.0 <= c <= 1.0:
        raise ValueError("c must lie in [0, 1]")
    if summary is None:
        summary = posterior_point_estimates(samples)
    p = topk_inclusion_probabilities(samples, K)[summary.a_hat]
    return summary.a_hat[p > c]


# --------------------------------------------------------------------------
# export tables (lists of dicts; cli_io writes them)


def display_order(summary: PosteriorSummary) -> np.ndarray:
    """Selected items by estimated rank, then the other HPS items by mean rank."""
    rest_mask = ~np.isin(summary.hps, summary.a_hat)
    rest = summary.hps[rest_mask]
    rest = rest[np.lexsort((rest, summary.x_bar[rest_mask]))]
    return np.concatenate([summary.ordering(), rest])


def rank_marginals(samples: PosteriorSamples, items) -> np.ndarray:
    """``P(rank = r | item selected)`` as an ``(len(items), n*)`` matrix."""
    _require_draws(samples)
    items = np.asarray(items, dtype=np.int64)
    n_star = samples.n_star
    counts = np.zeros((samples.n, n_star), dtype=np.int64)
    for k in range(n_star):
        counts[:, k] = np.bincount(samples.orders[:, k], minlength=samples.n)
    sub = counts[items].astype(float)
    tot = sub.sum(axis=1, keepdims=True)
    return np.divide(sub, tot, out=np.zeros_like(sub), where=tot > 0)


def heatplot_table(samples: PosteriorSamples, summary: PosteriorSummary, item_ids) -> list[dict]:
    items = display_order(summary)
    probs = rank_marginals(samples, items)
    w = selection_frequencies(samples)
    rows = []
    for pos, (item, p) in enumerate(zip(items, probs), start=1):
        for r in range(1, samples.n_star + 1):
            rows.append({"position": pos, "item_id": item_ids[item], "item_index": int(item),
                         "rank": r, "probability": float(p[r - 1]), "w_bar": float(w[item])})
    return rows


def trace_table(samples: PosteriorSamples, summary: PosteriorSummary, item_ids, top: int = 15) -> list[dict]:
    """Rank of each of the ``top`` leading items per stored draw (empty when unselected)."""
    items = summary.ordering()[:top]
    ranks = []
    for item in items:
        hit = samples.orders == item
        ranks.append(np.where(hit.any(axis=1), hit.argmax(axis=1) + 1, 0))
    rows = []
    for m in range(len(samples)):
        for item, r in zip(items, ranks):
            rows.append({"chain": int(samples.chain[m]), "iteration": int(samples.iterations[m]),
                         "item_id": item_ids[item], "rank": int(r[m]) or None})
    return rows


def violin_table(samples: PosteriorSamples, Ks, item_ids, floor: float = 0.0) -> list[dict]:
    """Top-K probabilities for each K in ``Ks``, dropping items at or below ``floor``."""
    rows = []
    for K in Ks:
        p = topk_inclusion_probabilities(samples, int(K))
        for item in np.flatnonzero(np.nan_to_num(p) > floor) if floor > 0 else np.flatnonzero(~np.isnan(p)):
            rows.append({"K": int(K), "item_id": item_ids[item], "item_index": int(item),
                         "probability": float(p[item])})
    return rows
