"""Nonparametric Bayesian quantile inference with quantile-pyramid priors."""

__version__ = "0.1.0"

from .pyramid import (
    DyadicQuantileVector,
    PiecewiseQuantileFunction,
    UnitAffineMap,
    identity_vector,
    refine,
)
from .priors import (
    LevelSchedule,
    PriorSpec,
    centering_means,
    log_prior_density,
    md_cdf,
    md_sample,
    parse_prior,
    sample_prior,
    tau2,
    transform_center,
    xi,
)
from .likelihoods import (
    Dataset,
    cell_counts,
    factorized_log_lik,
    log_lik_interp,
    log_lik_semiparam,
    log_lik_substitute,
)
from .sampler import ChainConfig, DrawMatrix, mh_sweep, run_chain, run_chain_semiparam
from .summaries import SummaryGrid, doksum_shift, gini, lorenz, parzen_comparison
from .summaries import posterior_summary
from .estimator import QuantilePyramidEstimator

__all__ = [
    "DyadicQuantileVector",
    "PiecewiseQuantileFunction",
    "UnitAffineMap",
    "identity_vector",
    "refine",
    "LevelSchedule",
    "PriorSpec",
    "centering_means",
    "log_prior_density",
    "md_cdf",
    "md_sample",
    "parse_prior",
    "sample_prior",
    "tau2",
    "transform_center",
    "xi",
    "Dataset",
    "cell_counts",
    "factorized_log_lik",
    "log_lik_interp",
    "log_lik_semiparam",
    "log_lik_substitute",
    "ChainConfig",
    "DrawMatrix",
    "mh_sweep",
    "run_chain",
    "run_chain_semiparam",
    "SummaryGrid",
    "posterior_summary",
    "lorenz",
    "gini",
    "doksum_shift",
    "parzen_comparison",
    "QuantilePyramidEstimator",
]
