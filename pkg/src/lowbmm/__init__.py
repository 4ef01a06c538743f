"""Variable selection for rank data with the lower-dimensional Bayesian Mallows model.

The sampler looks for the ``n_star`` items whose rankings agree across
assessors, together with their consensus order; the remaining items are
treated as noise.
"""
from __future__ import annotations

from .alpha import AlphaGridResult, estimate_alpha, mean_pairwise_distance, rescale_alpha
from .bench import Scenario, run_benchmark
from .datagen import GroundTruth, RankingDataset, apply_noise_swaps, gen_rank_consistency, gen_top_rank
from .mallows import sample_mallows
from .metrics import EvalReport, borda, coverage, d_norm, evaluate, recovery_distance
from .perms import footrule, kendall, max_footrule, rank_vector, restrict
from .postprocess import (
    PosteriorSummary,
    highest_probability_set,
    posterior_point_estimates,
    top_probability_selection,
    topk_inclusion_probabilities,
)
from .sampler import PosteriorSamples, SamplerConfig, run_chain, run_chains

__version__ = "0.1.0"

__all__ = [
    "AlphaGridResult", "EvalReport", "GroundTruth", "PosteriorSamples", "PosteriorSummary",
    "RankingDataset", "SamplerConfig", "Scenario", "apply_noise_swaps", "borda", "coverage",
    "d_norm", "estimate_alpha", "evaluate", "footrule", "gen_rank_consistency", "gen_top_rank",
    "highest_probability_set", "kendall", "max_footrule", "mean_pairwise_distance",
    "posterior_point_estimates", "rank_vector", "recovery_distance", "rescale_alpha", "restrict",
    "run_benchmark", "run_chain", "run_chains", "sample_mallows", "top_probability_selection",
    "topk_inclusion_probabilities",
]
