"""Shared generators and fixtures for the test suite."""

from __future__ import annotations

import math

import numpy as np

from piv.core import CounterfactualBelief, EstimateSign, ObservedStats

# Published summary statistics of the kindergarten-retention analysis
# (Hong and Raudenbush 2005): significant negative effect of retention
# on reading achievement.
CASE_STUDY = ObservedStats(
    r_squared=0.36,
    n_ob=7639,
    y_t_ob=36.77,
    y_c_ob=45.78,
    var_t=143.26,
    var_c=138.83,
    pi=0.0617,
)

BELIEF_1_CORNER = CounterfactualBelief(45.78, 45.2)


def random_observed_stats(rng: np.random.Generator) -> ObservedStats:
    """Well-conditioned random stats: positive variances, pi away from 0/1."""
    return ObservedStats(
        r_squared=float(rng.uniform(0.0, 0.95)),
        n_ob=int(rng.integers(2, 100_000)),
        y_t_ob=float(rng.uniform(-100.0, 100.0)),
        y_c_ob=float(rng.uniform(-100.0, 100.0)),
        var_t=float(rng.uniform(0.05, 200.0)),
        var_c=float(rng.uniform(0.05, 200.0)),
        pi=float(rng.uniform(0.01, 0.99)),
    )


def random_belief(rng: np.random.Generator) -> CounterfactualBelief:
    return CounterfactualBelief(
        y_t_un=float(rng.uniform(-100.0, 100.0)),
        y_c_un=float(rng.uniform(-100.0, 100.0)),
    )


def random_sign(rng: np.random.Generator) -> EstimateSign:
    return EstimateSign.POSITIVE if rng.random() < 0.5 else EstimateSign.NEGATIVE


def negate_stats(stats: ObservedStats) -> ObservedStats:
    return ObservedStats(
        r_squared=stats.r_squared,
        n_ob=stats.n_ob,
        y_t_ob=-stats.y_t_ob,
        y_c_ob=-stats.y_c_ob,
        var_t=stats.var_t,
        var_c=stats.var_c,
        pi=stats.pi,
    )


def negate_belief(belief: CounterfactualBelief) -> CounterfactualBelief:
    return CounterfactualBelief(y_t_un=-belief.y_t_un, y_c_un=-belief.y_c_un)


def binomial_mc_tolerance(p: float, reps: int) -> float:
    """Monte Carlo acceptance band: three binomial sd plus systematic slack."""
    return 3.0 * math.sqrt(p * (1.0 - p) / reps) + 0.02
