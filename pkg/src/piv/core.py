"""Closed-form engine for the probability that an inference survives retesting.

A significant two-group regression estimate rests on outcomes that were never
observed: every treated subject has an unrealized control outcome and vice
versa.  Completing the observed sample with those counterfactual rows (one
extra row per subject, treatment flipped, covariates identical) yields a
balanced "completed" sample in which the treatment coefficient has a known
normal distribution.  The PIV is the probability that the null hypothesis
would be rejected again in that completed sample, given one's belief about
the two mean counterfactual outcomes.

Everything here is a pure function of seven observed summary statistics

    r_squared   regression R-square of the fitted model
    n_ob        observed sample size
    y_t_ob      adjusted mean outcome, observed treated group
    y_c_ob      adjusted mean outcome, observed control group
    var_t       outcome variance in the observed treated group
    var_c       outcome variance in the observed control group
    pi          proportion of treated subjects

plus a belief (y_t_un, y_c_un) about the two mean counterfactual outcomes.

The completed-sample quantities are:

    y_t_id  = (1 - pi) * y_t_un + pi * y_t_ob
    y_c_id  = pi * y_c_un + (1 - pi) * y_c_ob
    sd_id   = sqrt(0.5*var_t + 0.5*pi*(1-pi)*[(y_t_un - y_t_ob)^2
              + (y_c_un - y_c_ob)^2] + 0.5*var_c
              + 0.25*(y_t_id - y_c_id)^2)
    r_id    = 0.5 * (y_t_id - y_c_id) / sd_id

and the treatment coefficient (standardized) is distributed

    N( r_id, (1 - r_squared) / (2 * n_ob) ).

With T = r_id / se and a signed critical value C, probit(PIV) = T - C for a
significant positive estimate and C - T for a significant negative one.
Counterfactual within-group variances are taken equal to the corresponding
observed within-group variances; the observed R-square is reused for the
completed-sample standard error.  The normal approximation is intended for
n_ob >= 30.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "PivError",
    "InputValidationError",
    "DegenerateSpreadError",
    "SignMismatchError",
    "ObservedStats",
    "CounterfactualBelief",
    "EstimateSign",
    "StatisticalThreshold",
    "FixedThreshold",
    "Threshold",
    "IdealStats",
    "PosteriorNormal",
    "PivResult",
    "std_normal_cdf",
    "std_normal_quantile",
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
]


class PivError(Exception):
    """Base error for this package."""


class InputValidationError(PivError, ValueError):
    """Inputs violate a documented contract (domain, type, finiteness)."""


class DegenerateSpreadError(PivError):
    """The completed sample has zero outcome spread; the correlation is undefined."""


class SignMismatchError(PivError, ValueError):
    """A fixed threshold lies on the wrong side of zero for the declared estimate sign."""


def _require_finite(value: float, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputValidationError(f"{name} must be a finite real number, got {value!r}")
    x = float(value)
    if not math.isfinite(x):
        raise InputValidationError(f"{name} must be finite, got {x}")
    return x


# =============================================================================
# Domain types
# =============================================================================


@dataclass(frozen=True)
class ObservedStats:
    """The seven observed summary statistics, validated on construction.

    r_squared in [0, 1); n_ob integer >= 2; var_t, var_c >= 0; pi in (0, 1).
    """

    r_squared: float
    n_ob: int
    y_t_ob: float
    y_c_ob: float
    var_t: float
    var_c: float
    pi: float

    def __post_init__(self) -> None:
        r2 = _require_finite(self.r_squared, "r_squared")
        if not 0.0 <= r2 < 1.0:
            raise InputValidationError(f"r_squared must be in [0, 1), got {r2}")
        if isinstance(self.n_ob, bool) or not isinstance(self.n_ob, int):
            raise InputValidationError(f"n_ob must be an integer, got {self.n_ob!r}")
        if self.n_ob < 2:
            raise InputValidationError(f"n_ob must be >= 2, got {self.n_ob}")
        _require_finite(self.y_t_ob, "y_t_ob")
        _require_finite(self.y_c_ob, "y_c_ob")
        for name in ("var_t", "var_c"):
            v = _require_finite(getattr(self, name), name)
            if v < 0.0:
                raise InputValidationError(f"{name} must be >= 0, got {v}")
        p = _require_finite(self.pi, "pi")
        if not 0.0 < p < 1.0:
            raise InputValidationError(f"pi must be strictly inside (0, 1), got {p}")
        object.__setattr__(self, "r_squared", r2)
        object.__setattr__(self, "y_t_ob", float(self.y_t_ob))
        object.__setattr__(self, "y_c_ob", float(self.y_c_ob))
        object.__setattr__(self, "var_t", float(self.var_t))
        object.__setattr__(self, "var_c", float(self.var_c))
        object.__setattr__(self, "pi", p)


@dataclass(frozen=True)
class CounterfactualBelief:
    """A single point belief about the two mean counterfactual outcomes."""

    y_t_un: float
    y_c_un: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "y_t_un", _require_finite(self.y_t_un, "y_t_un"))
        object.__setattr__(self, "y_c_un", _require_finite(self.y_c_un, "y_c_un"))


class EstimateSign(Enum):
    """Sign of the observed significant estimate."""

    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class StatisticalThreshold:
    """Threshold set as critical value times completed-sample standard error.

    Only the magnitude is stored; the sign is derived from the estimate sign
    (positive estimates reject above +critical_magnitude standard errors,
    negative ones below -critical_magnitude).
    """

    critical_magnitude: float

    def __post_init__(self) -> None:
        c = _require_finite(self.critical_magnitude, "critical_magnitude")
        if c <= 0.0:
            raise InputValidationError(f"critical_magnitude must be > 0, got {c}")
        object.__setattr__(self, "critical_magnitude", c)


@dataclass(frozen=True)
class FixedThreshold:
    """A pragmatically chosen effect-size threshold, in standardized units."""

    beta_sharp: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta_sharp", _require_finite(self.beta_sharp, "beta_sharp"))


Threshold = StatisticalThreshold | FixedThreshold


@dataclass(frozen=True)
class IdealStats:
    """Summary statistics of the completed sample implied by one belief point."""

    y_t_id: float
    y_c_id: float
    sigma_y_id: float
    r_wy_id: float


@dataclass(frozen=True)
class PosteriorNormal:
    """Normal distribution of the standardized treatment coefficient given the completed sample."""

    mean: float
    variance: float


@dataclass(frozen=True)
class PivResult:
    """PIV at one belief point, with the probit, resolved threshold and T-ratio."""

    piv: float
    probit_piv: float
    threshold_value: float
    t_ratio: float


# =============================================================================
# Standard normal distribution (cdf and quantile)
# =============================================================================

_SQRT2 = math.sqrt(2.0)
_SQRT_TWO_PI = math.sqrt(2.0 * math.pi)


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function.

    The erfc route keeps full relative precision in the lower tail, which the
    naive 0.5*(1 + erf(...)) form loses.
    """
    return 0.5 * math.erfc(-float(x) / _SQRT2)


# Rational approximation for the normal quantile (Acklam's coefficients),
# accurate to ~1.15e-9 relative; refined below by Halley iterations.
_ACKLAM_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_ACKLAM_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_ACKLAM_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_ACKLAM_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)
_ACKLAM_P_LOW = 0.02425


def _quantile_initial(p: float) -> float:
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    if p < _ACKLAM_P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    if p > 1.0 - _ACKLAM_P_LOW:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    q = p - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (
        ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
    )


def std_normal_quantile(p: float) -> float:
    """Inverse standard normal CDF for p strictly inside (0, 1).

    Acklam's rational approximation followed by two Halley refinement steps
    against std_normal_cdf; the refined result round-trips the cdf to float64
    resolution wherever the tail information survives in p itself.
    """
    if isinstance(p, bool) or not isinstance(p, (int, float)):
        raise InputValidationError(f"p must be a real number, got {p!r}")
    p = float(p)
    if not (0.0 < p < 1.0):
        raise InputValidationError(f"quantile requires 0 < p < 1, got {p}")
    x = _quantile_initial(p)
    for _ in range(2):
        err = std_normal_cdf(x) - p
        if err == 0.0:
            break
        pdf = math.exp(-0.5 * x * x) / _SQRT_TWO_PI
        if pdf <= 0.0 or not math.isfinite(pdf):
            break
        u = err / pdf
        step = u / (1.0 + 0.5 * x * u)
        if not math.isfinite(step):
            break
        x -= step
    return x


# =============================================================================
# Completed-sample statistics
# =============================================================================


def ideal_means(belief: CounterfactualBelief, stats: ObservedStats) -> tuple[float, float]:
    """Mean outcomes of the completed treated and control arms.

    Each arm mixes observed and counterfactual rows: the completed treated arm
    holds the pi*n_ob observed treated plus the (1-pi)*n_ob controls under
    their unrealized treatment, and symmetrically for control.
    """
    pi = stats.pi
    y_t_id = (1.0 - pi) * belief.y_t_un + pi * stats.y_t_ob
    y_c_id = pi * belief.y_c_un + (1.0 - pi) * stats.y_c_ob
    return y_t_id, y_c_id


def ideal_sd(belief: CounterfactualBelief, stats: ObservedStats) -> float:
    """Outcome standard deviation of the completed sample.

    Within each arm the outcome is a two-component mixture (observed and
    counterfactual cells with the arm's observed variance), and the two
    equally sized arms contribute a between-arm term of a quarter of the
    squared mean difference.  Returns 0.0 only in the fully degenerate case
    (both variances zero and all four means equal), which downstream
    operations surface as DegenerateSpreadError.
    """
    y_t_id, y_c_id = ideal_means(belief, stats)
    pi = stats.pi
    dev_sq = (belief.y_t_un - stats.y_t_ob) ** 2 + (belief.y_c_un - stats.y_c_ob) ** 2
    variance = (
        0.5 * stats.var_t
        + 0.5 * pi * (1.0 - pi) * dev_sq
        + 0.5 * stats.var_c
        + 0.25 * (y_t_id - y_c_id) ** 2
    )
    return math.sqrt(variance)


def ideal_correlation(belief: CounterfactualBelief, stats: ObservedStats) -> float:
    """Point-biserial correlation between treatment and outcome in the completed sample.

    Equals half the standardized arm mean difference, 0.5*(y_t_id - y_c_id)/sd,
    because the completed arms are exactly balanced.  Raises
    DegenerateSpreadError when the spread is zero.
    """
    sd = ideal_sd(belief, stats)
    if sd == 0.0:
        raise DegenerateSpreadError(
            "completed sample has zero outcome spread; correlation undefined"
        )
    y_t_id, y_c_id = ideal_means(belief, stats)
    return 0.5 * (y_t_id - y_c_id) / sd


def ideal_stats(belief: CounterfactualBelief, stats: ObservedStats) -> IdealStats:
    """All completed-sample summary statistics for one belief point."""
    y_t_id, y_c_id = ideal_means(belief, stats)
    sd = ideal_sd(belief, stats)
    if sd == 0.0:
        raise DegenerateSpreadError(
            "completed sample has zero outcome spread; correlation undefined"
        )
    return IdealStats(
        y_t_id=y_t_id,
        y_c_id=y_c_id,
        sigma_y_id=sd,
        r_wy_id=0.5 * (y_t_id - y_c_id) / sd,
    )


def se_ideal(stats: ObservedStats) -> float:
    """Standard error of the standardized coefficient in the completed sample.

    sqrt((1 - r_squared) / (2 * n_ob)); the completed sample has 2*n_ob rows
    and a balanced binary predictor.
    """
    return math.sqrt((1.0 - stats.r_squared) / (2.0 * stats.n_ob))


def posterior(belief: CounterfactualBelief, stats: ObservedStats) -> PosteriorNormal:
    """Distribution of the standardized treatment coefficient given the completed sample.

    The mean is the completed-sample correlation; the variance
    (1 - r_squared)/(2*n_ob) depends only on the observed statistics, never
    on the belief.
    """
    return PosteriorNormal(
        mean=ideal_correlation(belief, stats),
        variance=(1.0 - stats.r_squared) / (2.0 * stats.n_ob),
    )


# =============================================================================
# Thresholds and the PIV
# =============================================================================


def _signed_critical(magnitude: float, sign: EstimateSign) -> float:
    return magnitude if sign is EstimateSign.POSITIVE else -magnitude


def _check_fixed_sign(beta_sharp: float, sign: EstimateSign) -> None:
    if sign is EstimateSign.POSITIVE and beta_sharp < 0.0:
        raise SignMismatchError(
            f"fixed threshold {beta_sharp} is negative but the estimate sign is positive"
        )
    if sign is EstimateSign.NEGATIVE and beta_sharp > 0.0:
        raise SignMismatchError(
            f"fixed threshold {beta_sharp} is positive but the estimate sign is negative"
        )


def resolve_threshold(threshold: Threshold, sign: EstimateSign, stats: ObservedStats) -> float:
    """Resolve a threshold to a signed effect-size value.

    Fixed thresholds pass through verbatim (after a sign-consistency check);
    statistical thresholds become signed_critical_value * se_ideal(stats).
    """
    if isinstance(threshold, FixedThreshold):
        _check_fixed_sign(threshold.beta_sharp, sign)
        return threshold.beta_sharp
    if isinstance(threshold, StatisticalThreshold):
        return _signed_critical(threshold.critical_magnitude, sign) * se_ideal(stats)
    raise InputValidationError(f"unknown threshold type: {threshold!r}")


def saturation_limits(stats: ObservedStats) -> tuple[float, float]:
    """Limits of |correlation| as one counterfactual mean runs to infinity.

    Returns (t_limit, c_limit): as y_t_un -> +/-inf the correlation tends to
    +/-sqrt((1-pi)/(1+pi)); as y_c_un -> +/-inf it tends to
    -/+sqrt(pi/(2-pi)).  No belief can push |correlation| beyond the larger
    of the two.
    """
    pi = stats.pi
    return (
        math.sqrt((1.0 - pi) / (1.0 + pi)),
        math.sqrt(pi / (2.0 - pi)),
    )


def piv_from_correlation(
    r: float, stats: ObservedStats, sign: EstimateSign, threshold: Threshold
) -> PivResult:
    """PIV for a given completed-sample correlation.

    With T = r/se: statistical thresholds give probit = T - C (positive
    estimate) or C - T (negative), C signed; fixed thresholds give
    probit = (r - beta_sharp)/se or (beta_sharp - r)/se.
    """
    r = _require_finite(r, "correlation")
    se = se_ideal(stats)
    t_ratio = r / se
    positive = sign is EstimateSign.POSITIVE
    if isinstance(threshold, StatisticalThreshold):
        c = _signed_critical(threshold.critical_magnitude, sign)
        probit = (t_ratio - c) if positive else (c - t_ratio)
        threshold_value = c * se
    elif isinstance(threshold, FixedThreshold):
        _check_fixed_sign(threshold.beta_sharp, sign)
        b = threshold.beta_sharp
        probit = ((r - b) / se) if positive else ((b - r) / se)
        threshold_value = b
    else:
        raise InputValidationError(f"unknown threshold type: {threshold!r}")
    return PivResult(
        piv=std_normal_cdf(probit),
        probit_piv=probit,
        threshold_value=threshold_value,
        t_ratio=t_ratio,
    )


def probit_piv(
    belief: CounterfactualBelief,
    stats: ObservedStats,
    sign: EstimateSign,
    threshold: Threshold,
) -> float:
    """Probit of the PIV at one belief point."""
    r = ideal_correlation(belief, stats)
    return piv_from_correlation(r, stats, sign, threshold).probit_piv


def piv(
    belief: CounterfactualBelief,
    stats: ObservedStats,
    sign: EstimateSign,
    threshold: Threshold,
) -> PivResult:
    """PIV at one belief point: probability of rejecting the null again in the completed sample."""
    r = ideal_correlation(belief, stats)
    return piv_from_correlation(r, stats, sign, threshold)


def power_of_ideal_test(
    effect: float,
    stats: ObservedStats,
    sign: EstimateSign,
    critical_magnitude: float,
) -> float:
    """Power of the one-sided completed-sample z test under the alternative N(effect/se, 1).

    Rejects beyond the signed critical value; equals piv(...).piv whenever
    effect is the completed-sample correlation of the belief.
    """
    effect = _require_finite(effect, "effect")
    mag = _require_finite(critical_magnitude, "critical_magnitude")
    if mag <= 0.0:
        raise InputValidationError(f"critical_magnitude must be > 0, got {mag}")
    t_ratio = effect / se_ideal(stats)
    c = _signed_critical(mag, sign)
    probit = (t_ratio - c) if sign is EstimateSign.POSITIVE else (c - t_ratio)
    return std_normal_cdf(probit)
