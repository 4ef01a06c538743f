"""Recovery metrics against ground truth, and the BORDA baseline.

``d_norm`` is a footrule divided by the number ``n_corr`` of correctly
selected items (infinite when there are none); ``d_R`` is a Kendall
distance plus the wrong-selection penalty ``(n* - n_corr) (n + n* + 1) / 2``.
Two ways of comparing the consensus estimates are supported:

``by="labels"`` (default)
    each consensus is the sequence of item labels (1-based dataset
    positions) read from rank 1 to rank n*, and the two sequences are
    compared position by position over all n* positions.  This is the
    convention under which the reference benchmark figures are reproduced.
``by="ranks"``
    only the correctly selected items are compared, each through its rank
    in the true and in the estimated consensus.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .datagen import GroundTruth
from .perms import kendall, rank_vector
from .postprocess import PosteriorSummary

CONVENTIONS = ("labels", "ranks")


@dataclass
class EvalReport:
    n_corr: int
    coverage: float
    d_norm: float
    d_R: float
    d_norm_ranks: float
    d_R_ranks: float
    wall_time_sec: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def coverage(true_set, est_set) -> float:
    """Fraction of the true items that were selected."""
    true_set = np.asarray(true_set)
    est_set = np.asarray(est_set)
    if true_set.size != est_set.size:
        raise ValueError("true and estimated sets differ in size")
    return np.intersect1d(true_set, est_set).size / true_set.size


def _compared(truth: GroundTruth, est: PosteriorSummary, by: str):
    """Two aligned integer vectors to compare, and ``n_corr``."""
    if by not in CONVENTIONS:
        raise ValueError(f"by must be one of {CONVENTIONS}")
    _, it, ie = np.intersect1d(truth.true_set, est.a_hat, return_indices=True)
    if by == "ranks":
        return np.asarray(truth.true_consensus)[it], np.asarray(est.rho_hat)[ie], it.size
    if len(est.a_hat) != truth.n_star:
        raise ValueError("true and estimated sets differ in size")
    return truth.ordering() + 1, est.ordering() + 1, it.size


def d_norm(truth: GroundTruth, est: PosteriorSummary, by: str = "labels") -> float:
    """Footrule between the true and estimated consensus divided by ``n_corr``;
    ``inf`` when no item is correctly selected."""
    a, b, n_corr = _compared(truth, est, by)
    if n_corr == 0:
        return math.inf
    return float(np.abs(a - b).sum()) / n_corr


def recovery_distance(truth: GroundTruth, est: PosteriorSummary, n: int, by: str = "labels") -> float:
    """Kendall distance between the consensus estimates plus
    ``(n* - n_corr) (n + n* + 1) / 2``."""
    a, b, n_corr = _compared(truth, est, by)
    n_star = truth.n_star
    return kendall(a, b) + (n_star - n_corr) * (n + n_star + 1) / 2


def evaluate(truth: GroundTruth, est: PosteriorSummary, n: int, wall_time: float = 0.0) -> EvalReport:
    n_corr = int(np.intersect1d(truth.true_set, est.a_hat).size)
    return EvalReport(
        n_corr=n_corr,
        coverage=n_corr / truth.n_star,
        d_norm=d_norm(truth, est),
        d_R=recovery_distance(truth, est, n),
        d_norm_ranks=d_norm(truth, est, by="ranks"),
        d_R_ranks=recovery_distance(truth, est, n, by="ranks"),
        wall_time_sec=wall_time,
    )


def borda(rows, n_star: int) -> PosteriorSummary:
    """Mean-rank aggregation: the ``n_star`` items with the smallest mean rank."""
    R = np.asarray(rows, dtype=float)
    if R.ndim != 2 or R.shape[0] < 1:
        raise ValueError("need at least one ranking")
    mean = R.mean(axis=0)
    n = mean.size
    pick = np.sort(np.lexsort((np.arange(n), mean))[:n_star])
    rho_hat = rank_vector(mean[pick])
    return PosteriorSummary(hps=pick, a_hat=pick, rho_hat=rho_hat, x_bar=mean[pick])
