"""Bernoulli hypothesis tests with exact, Chernoff-Hoeffding and test-supermartingale p-values."""

from .core import (
    BoundInterval,
    DegenerateTraining,
    DomainError,
    HypothesisViolated,
    LogPValue,
    NullSemantics,
    NullSpec,
    TrialSequence,
    h_n,
    kl_bernoulli,
    log_binom_pmf,
    log_binomial,
    q_inverse,
    q_neg_log_tail,
    y_mills,
)
from .intervals import (
    ConfidenceLevel,
    EndpointResult,
    TrainedLambda,
    binomial_quantile,
    endpoint,
    endpoint_guaranteed_interval,
    gamma_deviation,
    true_deviation,
    two_sided,
)
from .pvalues import TestKind, log_p, log_p_all, log_p_ch, log_p_exact, log_p_pbr
from .supermartingale import (
    PbrClamped,
    PbrPoint,
    SupermartingaleState,
    TrainedSplit,
    TrainedSplitState,
    run,
    trained_lambda_log_p,
    trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "BoundInterval",
    "ConfidenceLevel",
    "DegenerateTraining",
    "DomainError",
    "EndpointResult",
    "HypothesisViolated",
    "LogPValue",
    "NullSemantics",
    "NullSpec",
    "PbrClamped",
    "PbrPoint",
    "SupermartingaleState",
    "TestKind",
    "TrainedLambda",
    "TrainedSplit",
    "TrainedSplitState",
    "TrialSequence",
    "binomial_quantile",
    "endpoint",
    "endpoint_guaranteed_interval",
    "gamma_deviation",
    "h_n",
    "kl_bernoulli",
    "log_binom_pmf",
    "log_binomial",
    "log_p",
    "log_p_all",
    "log_p_ch",
    "log_p_exact",
    "log_p_pbr",
    "q_inverse",
    "q_neg_log_tail",
    "run",
    "trained_lambda_log_p",
    "trajectory",
    "true_deviation",
    "two_sided",
    "y_mills",
]
