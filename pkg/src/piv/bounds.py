"""Bounding the PIV over rectangular belief regions.

A belief about the mean counterfactual outcomes is rarely a single point;
more often it is a rectangle "y_t_un at most A, y_c_un between B and C",
possibly unbounded on some sides.  This module evaluates the PIV on grids
over such rectangles, finds its extrema by a deterministic coarse scan plus
per-axis golden-section refinement, and turns the resulting lower bound into
a robustness verdict.

Unbounded sides are clamped to a finite effective range before searching
(the correlation saturates at finite limits, so beyond a few dozen outcome
standard deviations the PIV is flat); the clamp is flagged and the exact
asymptotic PIV for each unbounded direction is reported alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .core import (
    CounterfactualBelief,
    EstimateSign,
    InputValidationError,
    ObservedStats,
    Threshold,
    piv,
    piv_from_correlation,
    saturation_limits,
)

__all__ = [
    "BeliefRegion",
    "ContourGrid",
    "ClampFlags",
    "BoundResult",
    "Verdict",
    "evaluate_grid",
    "bound_piv",
    "robustness_verdict",
]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_TIE_TOL = 1e-12
_DEFAULT_CELL_CAP = 10_000_000


def _check_bound(value: float, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputValidationError(f"{name} must be a real number or +/-inf, got {value!r}")
    x = float(value)
    if math.isnan(x):
        raise InputValidationError(f"{name} must not be NaN")
    return x


@dataclass(frozen=True)
class BeliefRegion:
    """Rectangle of plausible (y_t_un, y_c_un) values; either side may be infinite."""

    t_interval: tuple[float, float]
    c_interval: tuple[float, float]

    def __post_init__(self) -> None:
        for axis, interval in (("t", self.t_interval), ("c", self.c_interval)):
            lo = _check_bound(interval[0], f"{axis}_interval lower bound")
            hi = _check_bound(interval[1], f"{axis}_interval upper bound")
            if lo > hi:
                raise InputValidationError(
                    f"{axis}_interval is empty: lower bound {lo} exceeds upper bound {hi}"
                )
            if lo == math.inf or hi == -math.inf:
                raise InputValidationError(f"{axis}_interval contains no finite point")
            object.__setattr__(self, f"{axis}_interval", (lo, hi))

    @property
    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (*self.t_interval, *self.c_interval))


@dataclass(frozen=True)
class ContourGrid:
    """PIV evaluated on a rectangular grid: one row per t value, one column per c value."""

    t_values: tuple[float, ...]
    c_values: tuple[float, ...]
    piv: tuple[tuple[float, ...], ...]

    def min(self) -> float:
        return min(min(row) for row in self.piv)

    def max(self) -> float:
        return max(max(row) for row in self.piv)

    def to_csv_text(self) -> str:
        """CSV serialization: header row of c values, first column of t values, PIV to 6 decimals."""
        lines = ["y_t_un," + ",".join(repr(c) for c in self.c_values)]
        for t, row in zip(self.t_values, self.piv):
            lines.append(repr(t) + "," + ",".join(f"{v:.6f}" for v in row))
        return "\n".join(lines) + "\n"

    def to_json_object(self) -> dict:
        return {
            "t_values": list(self.t_values),
            "c_values": list(self.c_values),
            "piv": [list(row) for row in self.piv],
        }


@dataclass(frozen=True)
class ClampFlags:
    """Which sides of the search region were clamped from an infinite bound."""

    t_lo: bool = False
    t_hi: bool = False
    c_lo: bool = False
    c_hi: bool = False

    def any(self) -> bool:
        return self.t_lo or self.t_hi or self.c_lo or self.c_hi


@dataclass(frozen=True)
class BoundResult:
    """Extremal PIV over a belief region, with the points attaining the extrema."""

    piv_min: float
    argmin: CounterfactualBelief
    piv_max: float
    argmax: CounterfactualBelief
    clamped: ClampFlags
    asymptotic_piv: dict[str, float]


class Verdict(Enum):
    ROBUST = "robust"
    NOT_ROBUST = "not_robust"
    INDETERMINATE = "indeterminate"


def _axis_points(lo: float, hi: float, n: int) -> tuple[float, ...]:
    if lo == hi:
        return (lo,)
    step = (hi - lo) / (n - 1)
    points = [lo + i * step for i in range(n)]
    points[-1] = hi
    return tuple(points)


def evaluate_grid(
    region: BeliefRegion,
    resolution: tuple[int, int],
    stats: ObservedStats,
    sign: EstimateSign,
    threshold: Threshold,
    *,
    cell_cap: int = _DEFAULT_CELL_CAP,
) -> ContourGrid:
    """Evaluate the PIV on a uniform grid over a finite region.

    Both endpoints of each axis are included; a zero-width axis yields a
    single coordinate.  Cells are independent, so any evaluation order gives
    bit-identical results.
    """
    if not region.is_finite:
        raise InputValidationError("evaluate_grid requires a finite region")
    nt, nc = resolution
    for name, n in (("nt", nt), ("nc", nc)):
        if isinstance(n, bool) or not isinstance(n, int) or n < 2:
            raise InputValidationError(f"resolution {name} must be an integer >= 2, got {n!r}")
    t_values = _axis_points(region.t_interval[0], region.t_interval[1], nt)
    c_values = _axis_points(region.c_interval[0], region.c_interval[1], nc)
    if len(t_values) * len(c_values) > cell_cap:
        raise InputValidationError(
            f"grid of {len(t_values)}x{len(c_values)} cells exceeds cap {cell_cap}"
        )
    rows = []
    for t in t_values:
        row = [
            piv(CounterfactualBelief(t, c), stats, sign, threshold).piv for c in c_values
        ]
        rows.append(tuple(row))
    return ContourGrid(t_values=t_values, c_values=c_values, piv=tuple(rows))


def _argext_lex(matrix: tuple[tuple[float, ...], ...], minimize: bool) -> tuple[int, int]:
    """Index of the extremum; ties within 1e-12 go to the lexicographically smallest index."""
    best = min(min(row) for row in matrix) if minimize else max(max(row) for row in matrix)
    for i, row in enumerate(matrix):
        for j, v in enumerate(row):
            if abs(v - best) <= _TIE_TOL:
                return i, j
    raise AssertionError("extremum vanished during scan")  # pragma: no cover


def _golden_section(f, lo: float, hi: float, iters: int, minimize: bool) -> tuple[float, float]:
    """Deterministic golden-section search on [lo, hi]; returns the best probe found."""
    better = (lambda a, b: a < b) if minimize else (lambda a, b: a > b)
    candidates = [(lo, f(lo)), (hi, f(hi))]
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if better(f1, f2):
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
    candidates.extend([(x1, f1), (x2, f2)])
    best_x, best_v = candidates[0]
    for x, v in candidates[1:]:
        if better(v, best_v):
            best_x, best_v = x, v
    return best_x, best_v


def _refine(
    grid: ContourGrid,
    index: tuple[int, int],
    minimize: bool,
    refine_iters: int,
    objective,
) -> tuple[float, float, float]:
    """Coordinate descent from a grid cell: golden-section over the neighbor bracket per axis."""
    i, j = index
    t = grid.t_values[i]
    c = grid.c_values[j]
    value = grid.piv[i][j]
    better = (lambda a, b: a < b) if minimize else (lambda a, b: a > b)
    t_lo = grid.t_values[max(i - 1, 0)]
    t_hi = grid.t_values[min(i + 1, len(grid.t_values) - 1)]
    c_lo = grid.c_values[max(j - 1, 0)]
    c_hi = grid.c_values[min(j + 1, len(grid.c_values) - 1)]
    for _ in range(2):  # two coordinate sweeps suffice for a smooth 2D surface
        if t_lo < t_hi:
            x, v = _golden_section(lambda u: objective(u, c), t_lo, t_hi, refine_iters, minimize)
            if better(v, value):
                t, value = x, v
        if c_lo < c_hi:
            x, v = _golden_section(lambda u: objective(t, u), c_lo, c_hi, refine_iters, minimize)
            if better(v, value):
                c, value = x, v
    return t, c, value


def bound_piv(
    region: BeliefRegion,
    stats: ObservedStats,
    sign: EstimateSign,
    threshold: Threshold,
    *,
    coarse_resolution: tuple[int, int] = (101, 101),
    refine_iters: int = 60,
    clamp_width: float | None = None,
) -> BoundResult:
    """Extremal PIV over a belief region.

    Coarse grid scan over the (clamped) region, then golden-section
    refinement per axis starting from the best and worst cells.  Unbounded
    sides are clamped at clamp_width beyond the observed grand mean (default
    10 outcome standard deviations, using the larger group variance); the
    flags record which sides were clamped and asymptotic_piv carries the
    exact limit PIV for each unbounded direction.
    """
    if clamp_width is None:
        clamp_width = 10.0 * math.sqrt(max(stats.var_t, stats.var_c))
    elif clamp_width < 0.0 or not math.isfinite(clamp_width):
        raise InputValidationError(f"clamp_width must be finite and >= 0, got {clamp_width}")
    anchor = stats.pi * stats.y_t_ob + (1.0 - stats.pi) * stats.y_c_ob

    def clamp(interval: tuple[float, float]) -> tuple[tuple[float, float], bool, bool]:
        lo, hi = interval
        lo_clamped = hi_clamped = False
        if lo == -math.inf:
            lo = min(anchor - clamp_width, hi)
            lo_clamped = True
        if hi == math.inf:
            hi = max(anchor + clamp_width, lo)
            hi_clamped = True
        return (lo, hi), lo_clamped, hi_clamped

    t_interval, t_lo_clamped, t_hi_clamped = clamp(region.t_interval)
    c_interval, c_lo_clamped, c_hi_clamped = clamp(region.c_interval)
    flags = ClampFlags(t_lo_clamped, t_hi_clamped, c_lo_clamped, c_hi_clamped)
    search_region = BeliefRegion(t_interval=t_interval, c_interval=c_interval)

    grid = evaluate_grid(search_region, coarse_resolution, stats, sign, threshold)

    def objective(t: float, c: float) -> float:
        return piv(CounterfactualBelief(t, c), stats, sign, threshold).piv

    results = {}
    for minimize in (True, False):
        index = _argext_lex(grid.piv, minimize)
        t, c, value = _refine(grid, index, minimize, refine_iters, objective)
        results[minimize] = (value, CounterfactualBelief(t, c))

    # Asymptotic PIV per unbounded direction, from the correlation saturation limits.
    t_limit, c_limit = saturation_limits(stats)
    direction_r = {
        "t_lo": -t_limit,
        "t_hi": t_limit,
        "c_lo": c_limit,
        "c_hi": -c_limit,
    }
    asymptotic = {
        name: piv_from_correlation(r, stats, sign, threshold).piv
        for name, r in direction_r.items()
        if getattr(flags, name)
    }

    return BoundResult(
        piv_min=results[True][0],
        argmin=results[True][1],
        piv_max=results[False][0],
        argmax=results[False][1],
        clamped=flags,
        asymptotic_piv=asymptotic,
    )


def robustness_verdict(bound: BoundResult, piv_threshold: float = 0.8) -> Verdict:
    """Classify a bound against a PIV threshold (0.8 is the usual strong-power mark).

    Robust when even the lower bound clears the threshold; not robust when
    even the upper bound misses it; indeterminate otherwise.
    """
    if not (0.0 < piv_threshold < 1.0):
        raise InputValidationError(f"piv_threshold must be in (0, 1), got {piv_threshold}")
    if bound.piv_min >= piv_threshold:
        return Verdict.ROBUST
    if bound.piv_max < piv_threshold:
        return Verdict.NOT_ROBUST
    return Verdict.INDETERMINATE
