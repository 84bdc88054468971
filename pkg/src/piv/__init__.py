"""Robustness of significant two-group regression inferences to failures of
unconfoundedness: evaluate and bound the probability (PIV) that the null
hypothesis would be rejected again once the sample is completed with
counterfactual outcomes."""

from .core import (
    CounterfactualBelief,
    DegenerateSpreadError,
    EstimateSign,
    FixedThreshold,
    IdealStats,
    InputValidationError,
    ObservedStats,
    PivError,
    PivResult,
    PosteriorNormal,
    SignMismatchError,
    StatisticalThreshold,
    Threshold,
    ideal_correlation,
    ideal_means,
    ideal_sd,
    ideal_stats,
    piv,
    piv_from_correlation,
    posterior,
    power_of_ideal_test,
    probit_piv,
    resolve_threshold,
    saturation_limits,
    se_ideal,
    std_normal_cdf,
    std_normal_quantile,
)
from .bounds import (
    BeliefRegion,
    BoundResult,
    ClampFlags,
    ContourGrid,
    Verdict,
    bound_piv,
    evaluate_grid,
    robustness_verdict,
)

__version__ = "0.1.0"

__all__ = [
    "ObservedStats",
    "CounterfactualBelief",
    "EstimateSign",
    "StatisticalThreshold",
    "FixedThreshold",
    "Threshold",
    "IdealStats",
    "PosteriorNormal",
    "PivResult",
    "PivError",
    "InputValidationError",
    "DegenerateSpreadError",
    "SignMismatchError",
    "ideal_means",
    "ideal_sd",
    "ideal_correlation",
    "ideal_stats",
    "se_ideal",
    "posterior",
    "resolve_threshold",
    "saturation_limits",
    "piv_from_correlation",
    "probit_piv",
    "piv",
    "power_of_ideal_test",
    "std_normal_cdf",
    "std_normal_quantile",
    "BeliefRegion",
    "ContourGrid",
    "ClampFlags",
    "BoundResult",
    "Verdict",
    "evaluate_grid",
    "bound_piv",
    "robustness_verdict",
    "__version__",
]
