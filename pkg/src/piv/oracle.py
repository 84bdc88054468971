"""Brute-force verification of the closed-form engine on explicit datasets.

The closed forms in piv.core are derived by block-matrix algebra over the
completed sample.  This module rebuilds everything the hard way: it
constructs explicit completed datasets whose four (arm x provenance) cells
match target means and variances exactly, fits least squares through the
normal equations with a hand-rolled Gaussian elimination, and checks the
closed forms against those fits.  It also estimates the PIV by Monte Carlo
as a rejection rate over simulated completed samples.

Conventions that the checks depend on:

  * all sample variances and covariances use the 1/n divisor;
  * each subject contributes one row per treatment arm with identical
    covariates, so treatment is exactly balanced (mean 1/2, variance 1/4)
    and uncorrelated with every covariate by construction;
  * the design matrix is [1, Z_1..Z_p, W] with the treatment column last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    EstimateSign,
    FixedThreshold,
    InputValidationError,
    ObservedStats,
    PivError,
    StatisticalThreshold,
    Threshold,
    resolve_threshold,
)

__all__ = [
    "SingularDesignError",
    "SyntheticSpec",
    "IdealDataset",
    "OlsFit",
    "build_exact_dataset",
    "ols_fit",
    "w_coefficient_via_moments",
    "standardized_w_coefficient",
    "block_inverse_check",
    "bayes_combination_check",
    "monte_carlo_piv",
    "random_spec",
    "gaussian_solve",
    "gaussian_inverse",
]

_PIVOT_RTOL = 1e-10


class SingularDesignError(PivError):
    """The design matrix is numerically rank deficient."""


# =============================================================================
# Dense linear algebra (no external solver)
# =============================================================================


def gaussian_solve(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve matrix @ x = rhs by Gaussian elimination with partial pivoting.

    rhs may have several columns.  Raises SingularDesignError when the
    smallest pivot falls below 1e-10 of the largest.
    """
    a = np.array(matrix, dtype=float)
    b = np.array(rhs, dtype=float)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    n = a.shape[0]
    if a.shape != (n, n) or b.shape[0] != n:
        raise InputValidationError("gaussian_solve requires square matrix and matching rhs")
    if n == 0:
        return b[:, 0] if squeeze else b
    pivots = []
    for k in range(n):
        lead = k + int(np.argmax(np.abs(a[k:, k])))
        pivot = abs(a[lead, k])
        if pivot == 0.0:
            raise SingularDesignError(f"zero pivot at elimination step {k}")
        pivots.append(pivot)
        if lead != k:
            a[[k, lead]] = a[[lead, k]]
            b[[k, lead]] = b[[lead, k]]
        factors = a[k + 1 :, k] / a[k, k]
        a[k + 1 :, k:] -= factors[:, None] * a[k, k:]
        b[k + 1 :] -= factors[:, None] * b[k]
    if min(pivots) < _PIVOT_RTOL * max(pivots):
        raise SingularDesignError(
            f"pivot ratio {min(pivots) / max(pivots):.3e} below {_PIVOT_RTOL:.0e}"
        )
    x = np.empty_like(b)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1 :] @ x[k + 1 :]) / a[k, k]
    return x[:, 0] if squeeze else x


def gaussian_inverse(matrix: np.ndarray) -> np.ndarray:
    """Matrix inverse via gaussian_solve against the identity."""
    a = np.asarray(matrix, dtype=float)
    n = a.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    return gaussian_solve(a, np.eye(n))


# =============================================================================
# Exact-moment completed datasets
# =============================================================================


@dataclass(frozen=True)
class SyntheticSpec:
    """Targets for an exact-moment completed dataset.

    pi * n_ob and (1 - pi) * n_ob must be positive even integers so that
    every (arm x provenance) cell can be matched exactly by a symmetric
    two-point placement.
    """

    n_ob: int
    pi: float
    y_t_ob: float
    y_c_ob: float
    y_t_un: float
    y_c_un: float
    var_t: float
    var_c: float
    p: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.n_ob, int) or self.n_ob <= 0 or self.n_ob % 2:
            raise InputValidationError(f"n_ob must be a positive even integer, got {self.n_ob!r}")
        n_t = self.pi * self.n_ob
        if abs(n_t - round(n_t)) > 1e-9:
            raise InputValidationError(f"pi * n_ob must be integral, got {n_t}")
        n_t = round(n_t)
        n_c = self.n_ob - n_t
        for name, count in (("pi * n_ob", n_t), ("(1 - pi) * n_ob", n_c)):
            if count <= 0 or count % 2:
                raise InputValidationError(f"{name} must be a positive even integer, got {count}")
        for name in ("var_t", "var_c"):
            if getattr(self, name) < 0.0:
                raise InputValidationError(f"{name} must be >= 0")
        if not isinstance(self.p, int) or self.p < 0:
            raise InputValidationError(f"p must be a nonnegative integer, got {self.p!r}")

    @property
    def n_treated(self) -> int:
        return round(self.pi * self.n_ob)

    @property
    def n_control(self) -> int:
        return self.n_ob - self.n_treated

    def observed_stats(self, r_squared: float) -> ObservedStats:
        """The ObservedStats view of this spec, for closed-form comparisons."""
        return ObservedStats(
            r_squared=r_squared,
            n_ob=self.n_ob,
            y_t_ob=self.y_t_ob,
            y_c_ob=self.y_c_ob,
            var_t=self.var_t,
            var_c=self.var_c,
            pi=self.pi,
        )


@dataclass(frozen=True, eq=False)
class IdealDataset:
    """An explicit completed sample: 2*n_ob rows of (outcome, treatment, covariates).

    Rows 0..n_ob-1 are the observed sample in subject order; rows
    n_ob..2*n_ob-1 are the same subjects' counterfactual rows (treatment
    flipped, covariates identical).
    """

    outcome: np.ndarray
    w: np.ndarray
    z: np.ndarray
    observed: np.ndarray

    @property
    def n_ob(self) -> int:
        return self.outcome.shape[0] // 2

    @property
    def p(self) -> int:
        return self.z.shape[1]

    def design_matrix(self) -> np.ndarray:
        """[1, Z, W] with the treatment column last."""
        n_rows = self.outcome.shape[0]
        return np.column_stack([np.ones(n_rows), self.z, self.w])


def _two_point_cell(mean: float, sd: float, count: int) -> np.ndarray:
    # count is even; half the points at mean + sd, half at mean - sd matches
    # the target mean and 1/n variance exactly.
    half = count // 2
    return np.concatenate([np.full(half, mean + sd), np.full(half, mean - sd)])


def build_exact_dataset(spec: SyntheticSpec) -> IdealDataset:
    """Construct a completed dataset matching all four cell moments exactly.

    Cells and their targets (sd = sqrt of the group variance):

        observed treated          n_t rows at y_t_ob +/- sd_t
        observed control          n_c rows at y_c_ob +/- sd_c
        counterfactual treated    n_c rows at y_t_un +/- sd_t
        counterfactual control    n_t rows at y_c_un +/- sd_c

    Covariates are drawn once per subject from the seed and repeated on the
    counterfactual row, which forces zero sample covariance between
    treatment and every covariate.
    """
    n_t, n_c, n = spec.n_treated, spec.n_control, spec.n_ob
    sd_t, sd_c = math.sqrt(spec.var_t), math.sqrt(spec.var_c)

    rng = np.random.default_rng(spec.seed)
    z_subject = rng.standard_normal((n, spec.p))

    observed_outcomes = np.concatenate(
        [
            _two_point_cell(spec.y_t_ob, sd_t, n_t),
            _two_point_cell(spec.y_c_ob, sd_c, n_c),
        ]
    )
    counterfactual_outcomes = np.concatenate(
        [
            _two_point_cell(spec.y_c_un, sd_c, n_t),  # treated subjects, control arm
            _two_point_cell(spec.y_t_un, sd_t, n_c),  # control subjects, treated arm
        ]
    )
    observed_w = np.concatenate([np.ones(n_t), np.zeros(n_c)])

    dataset = IdealDataset(
        outcome=np.concatenate([observed_outcomes, counterfactual_outcomes]),
        w=np.concatenate([observed_w, 1.0 - observed_w]),
        z=np.vstack([z_subject, z_subject]),
        observed=np.concatenate([np.ones(n, dtype=bool), np.zeros(n, dtype=bool)]),
    )
    # Balanced arms are structural: each subject appears once per arm.
    w = dataset.w
    assert w.mean() == 0.5 and float(np.mean((w - 0.5) ** 2)) == 0.25
    return dataset


# =============================================================================
# Least squares through the normal equations
# =============================================================================


@dataclass(frozen=True, eq=False)
class OlsFit:
    """Coefficients and inverse Gram matrix of a least-squares fit.

    coefficient_variance_w is the variance of the treatment coefficient per
    unit residual variance, i.e. the bottom-right entry of (X'X)^-1.
    """

    coefficients: np.ndarray
    xtx_inverse: np.ndarray
    coefficient_variance_w: float


def ols_fit(dataset: IdealDataset) -> OlsFit:
    """Fit [1, Z, W] by solving the normal equations directly."""
    x = dataset.design_matrix()
    gram = x.T @ x
    moment = x.T @ dataset.outcome
    coefficients = gaussian_solve(gram, moment)
    residual = np.max(np.abs(gram @ coefficients - moment))
    scale = max(np.max(np.abs(moment)), 1.0)
    if residual > 1e-9 * scale:
        raise SingularDesignError(
            f"normal-equation residual {residual:.3e} exceeds 1e-9 relative"
        )
    inverse = gaussian_solve(gram, np.eye(gram.shape[0]))
    return OlsFit(
        coefficients=coefficients,
        xtx_inverse=inverse,
        coefficient_variance_w=float(inverse[-1, -1]),
    )


def _moments(dataset: IdealDataset) -> dict:
    """Sample means and 1/n covariance blocks of (Z, W, Y)."""
    y = dataset.outcome
    w = dataset.w
    z = dataset.z
    y_c = y - y.mean()
    w_c = w - w.mean()
    z_c = z - z.mean(axis=0)
    n = y.shape[0]
    return {
        "n": n,
        "y_mean": y.mean(),
        "w_mean": w.mean(),
        "z_mean": z.mean(axis=0),
        "s_zz": (z_c.T @ z_c) / n,
        "s_zw": (z_c.T @ w_c) / n,
        "s_zy": (z_c.T @ y_c) / n,
        "s_ww": float(w_c @ w_c) / n,
        "s_wy": float(w_c @ y_c) / n,
        "s_yy": float(y_c @ y_c) / n,
    }


def w_coefficient_via_moments(dataset: IdealDataset) -> float:
    """Treatment coefficient from sample covariances alone.

    (s_wy - s_wz s_zz^-1 s_zy) / (s_ww - s_wz s_zz^-1 s_zw); an independent
    route to the same number ols_fit produces by elimination.
    """
    m = _moments(dataset)
    if dataset.p == 0:
        return m["s_wy"] / m["s_ww"]
    szz_inv_szw = gaussian_solve(m["s_zz"], m["s_zw"])
    szz_inv_szy = gaussian_solve(m["s_zz"], m["s_zy"])
    numerator = m["s_wy"] - float(m["s_zw"] @ szz_inv_szy)
    denominator = m["s_ww"] - float(m["s_zw"] @ szz_inv_szw)
    return numerator / denominator


def standardized_w_coefficient(dataset: IdealDataset) -> float:
    """Treatment coefficient after scaling outcome and treatment to unit variance."""
    fit = ols_fit(dataset)
    m = _moments(dataset)
    return float(fit.coefficients[-1]) * math.sqrt(m["s_ww"]) / math.sqrt(m["s_yy"])


def block_inverse_check(dataset: IdealDataset) -> float:
    """Assemble (X'X)^-1 from block formulas and compare to direct inversion.

    The Gram matrix of [1, V] with V = [Z, W] inverts blockwise through the
    predictor covariance S_VV: with N rows and mean vector v,

        top-left      1/N + v (1/N) S_VV^-1 v'
        top edge      -(1/N) v S_VV^-1
        body          (1/N) S_VV^-1

    and S_VV itself inverts through the Schur complement of its covariate
    block.  Returns the maximum entrywise discrepancy against the direct
    Gaussian-elimination inverse, scaled by the largest entry magnitude.
    """
    m = _moments(dataset)
    n = m["n"]
    p = dataset.p

    szz_inv = gaussian_inverse(m["s_zz"])
    schur = m["s_ww"] - float(m["s_zw"] @ (szz_inv @ m["s_zw"]))
    if schur <= 0.0:
        raise SingularDesignError("nonpositive Schur complement of the covariate block")
    schur_inv = 1.0 / schur

    s_vv_inv = np.empty((p + 1, p + 1))
    szz_inv_szw = szz_inv @ m["s_zw"]
    s_vv_inv[:p, :p] = szz_inv + schur_inv * np.outer(szz_inv_szw, szz_inv_szw)
    s_vv_inv[:p, p] = -schur_inv * szz_inv_szw
    s_vv_inv[p, :p] = -schur_inv * szz_inv_szw
    s_vv_inv[p, p] = schur_inv

    v_mean = np.concatenate([m["z_mean"], [m["w_mean"]]])
    assembled = np.empty((p + 2, p + 2))
    assembled[0, 0] = 1.0 / n + float(v_mean @ s_vv_inv @ v_mean) / n
    assembled[0, 1:] = -(v_mean @ s_vv_inv) / n
    assembled[1:, 0] = assembled[0, 1:]
    assembled[1:, 1:] = s_vv_inv / n

    # Closed forms for the last row, assembled independently of the blocks above.
    last_row = np.empty(p + 2)
    last_row[0] = (float(m["s_zw"] @ (szz_inv @ m["z_mean"])) * schur_inv - m["w_mean"] * schur_inv) / n
    last_row[1 : p + 1] = -(schur_inv * (m["s_zw"] @ szz_inv)) / n
    last_row[p + 1] = schur_inv / n

    direct = gaussian_inverse(dataset.design_matrix().T @ dataset.design_matrix())
    scale = float(np.max(np.abs(direct)))
    error = float(np.max(np.abs(assembled - direct)))
    error = max(error, float(np.max(np.abs(last_row - direct[-1]))))
    return error / scale


def bayes_combination_check(dataset: IdealDataset) -> float:
    """Verify that combining the two half-samples reproduces the full fit.

    Splitting the rows into observed and counterfactual halves, the
    coefficient vector solving

        (Xo'Xo + Xu'Xu) b = Xo'Yo + Xu'Yu

    must match the least-squares fit on the stacked dataset, because the
    stacked Gram matrix and moment vector are exactly those sums.  Returns
    the maximum coefficient discrepancy.
    """
    observed = dataset.observed
    if not observed.any() or observed.all():
        raise InputValidationError("dataset must contain both observed and counterfactual rows")
    x = dataset.design_matrix()
    y = dataset.outcome
    xo, yo = x[observed], y[observed]
    xu, yu = x[~observed], y[~observed]
    combined = gaussian_solve(xo.T @ xo + xu.T @ xu, xo.T @ yo + xu.T @ yu)
    stacked = ols_fit(dataset).coefficients
    return float(np.max(np.abs(combined - stacked)))


# =============================================================================
# Monte Carlo rejection rate
# =============================================================================


def monte_carlo_piv(
    spec: SyntheticSpec,
    stats: ObservedStats,
    sign: EstimateSign,
    threshold: Threshold,
    reps: int,
    seed: int = 0,
) -> float:
    """Empirical rejection rate over simulated completed samples.

    Each replication draws every cell's outcomes from a normal with that
    cell's target mean and variance, computes the completed-sample
    correlation r from the arm moments (the standardized two-group fit), and
    rejects when z = r * sqrt(2 n_ob) / sqrt(1 - r^2) crosses the signed
    critical value; a fixed threshold is compared against r directly.  Each
    replication uses its own child stream of the seed, so the rate does not
    depend on evaluation order.
    """
    if not isinstance(reps, int) or reps < 1000:
        raise InputValidationError(f"reps must be an integer >= 1000, got {reps!r}")
    for name in ("n_ob", "pi", "y_t_ob", "y_c_ob", "var_t", "var_c"):
        if not math.isclose(getattr(spec, name), getattr(stats, name), rel_tol=1e-12, abs_tol=1e-12):
            raise InputValidationError(
                f"spec and stats disagree on {name}: {getattr(spec, name)} vs {getattr(stats, name)}"
            )
    n_t, n_c, n = spec.n_treated, spec.n_control, spec.n_ob
    sd_t, sd_c = math.sqrt(spec.var_t), math.sqrt(spec.var_c)
    scale = math.sqrt(2.0 * n)
    positive = sign is EstimateSign.POSITIVE
    if isinstance(threshold, StatisticalThreshold):
        critical = threshold.critical_magnitude if positive else -threshold.critical_magnitude
        beta_sharp = None
    elif isinstance(threshold, FixedThreshold):
        critical = None
        beta_sharp = resolve_threshold(threshold, sign, stats)
    else:
        raise InputValidationError(f"unknown threshold type: {threshold!r}")

    rejections = 0
    for child in np.random.SeedSequence(seed).spawn(reps):
        rng = np.random.default_rng(child)
        treated = np.concatenate(
            [
                spec.y_t_ob + sd_t * rng.standard_normal(n_t),
                spec.y_t_un + sd_t * rng.standard_normal(n_c),
            ]
        )
        control = np.concatenate(
            [
                spec.y_c_ob + sd_c * rng.standard_normal(n_c),
                spec.y_c_un + sd_c * rng.standard_normal(n_t),
            ]
        )
        mean_t, mean_c = treated.mean(), control.mean()
        var_pooled = (
            0.5 * float(np.var(treated))
            + 0.5 * float(np.var(control))
            + 0.25 * (mean_t - mean_c) ** 2
        )
        if var_pooled == 0.0:
            continue
        r = 0.5 * (mean_t - mean_c) / math.sqrt(var_pooled)
        if critical is None:
            rejected = r > beta_sharp if positive else r < beta_sharp
        else:
            # |r| = 1 happens only for zero-variance cells; the z statistic
            # is then unbounded on the side of r
            z = scale * r / math.sqrt(1.0 - r * r) if r * r < 1.0 else math.inf * r
            rejected = z > critical if positive else z < critical
        rejections += rejected
    return rejections / reps


# =============================================================================
# Seeded spec generation for batch verification
# =============================================================================


def random_spec(seed: int, p: int | None = None, n_ob: int | None = None) -> SyntheticSpec:
    """A reproducible, well-conditioned spec for batch checks.

    Covariate counts cycle through 0..6 and sample sizes through 8..512
    unless pinned; means are kept separated so relative comparisons of the
    treatment coefficient stay meaningful.
    """
    rng = np.random.default_rng(seed)
    if p is None:
        p = int(seed) % 7
    if n_ob is None:
        n_ob = int(rng.choice([8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256, 384, 512]))
    half_pairs = n_ob // 2
    n_t = 2 * int(rng.integers(1, half_pairs))  # even, in [2, n_ob - 2]
    y_c_ob = float(rng.uniform(-20.0, 20.0))
    offset = float(rng.uniform(1.0, 15.0)) * (1 if rng.random() < 0.5 else -1)
    return SyntheticSpec(
        n_ob=n_ob,
        pi=n_t / n_ob,
        y_t_ob=y_c_ob + offset,
        y_c_ob=y_c_ob,
        y_t_un=float(rng.uniform(-20.0, 20.0)),
        y_c_un=float(rng.uniform(-20.0, 20.0)),
        var_t=float(rng.uniform(0.5, 40.0)),
        var_c=float(rng.uniform(0.5, 40.0)),
        p=p,
        seed=int(rng.integers(0, 2**63 - 1)),
    )
