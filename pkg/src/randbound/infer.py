"""Bounded-null tests, confidence intervals for extreme effects, and the
intersection-union simultaneous test.

A one-sided test of the sharp null tau_i = tau0 with an effect-increasing
statistic is a conservative test of the bounded null (non-superiority:
tau_i <= tau0 for every unit). Inverting a sequence of constant-shift
tests therefore yields a one-sided confidence interval for the maximum
unit-level effect. Non-inferiority and minimum-effect versions reduce to
the same machinery on negated outcomes with mirrored statistic parameters.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import ConstantEffect, Dataset, Design, EffectSpec
from .errors import NonEIStatisticError, NonMonotonePValueError
from .refdist import Exact, Mode, PValue, Tail, p_value
from .impute import ImputationVariant
from .stats import TestStatistic, describe_statistic


class Direction(enum.Enum):
    NON_SUPERIORITY = "non-superiority"
    NON_INFERIORITY = "non-inferiority"


class Target(enum.Enum):
    MAX_EFFECT = "max"
    MIN_EFFECT = "min"


def _require_ei(stat: TestStatistic) -> None:
    if not stat.ei:
        raise NonEIStatisticError(
            f"{describe_statistic(stat)} is not effect-increasing; bounded-null "
            "validity requires an effect-increasing statistic"
        )


@dataclass(frozen=True)
class BoundedTestResult:
    direction: Direction
    effect: EffectSpec
    stat: str
    alpha: float
    pvalue: PValue
    reject: bool


def directed_p_value(
    dataset: Dataset,
    effect: EffectSpec,
    stat: TestStatistic,
    design: Design,
    direction: Direction,
    mode: Mode = Exact(),
    *,
    variant: ImputationVariant = ImputationVariant.BOTH_SIDES,
    threads: int = 1,
    collect_values: bool | None = None,
):
    """Upper-tail p-value in the direction's frame, with its distribution.

    Non-superiority evaluates the imputed schedule as-is; non-inferiority
    negates outcomes and hypothesized effects and mirrors the statistic's
    parameters before running the same upper-tail machinery.
    """
    if direction is Direction.NON_SUPERIORITY:
        return p_value(
            dataset, effect, stat, design, mode, Tail.UPPER,
            variant=variant, threads=threads, collect_values=collect_values,
        )
    return p_value(
        dataset.negated(), effect.negated(), stat.mirrored(), design,
        mode, Tail.UPPER, variant=variant, threads=threads,
        collect_values=collect_values,
    )


def test_bounded(
    dataset: Dataset,
    effect: EffectSpec,
    stat: TestStatistic,
    design: Design,
    direction: Direction = Direction.NON_SUPERIORITY,
    alpha: float = 0.05,
    mode: Mode = Exact(),
    *,
    variant: ImputationVariant = ImputationVariant.BOTH_SIDES,
    threads: int = 1,
) -> BoundedTestResult:
    """Test that all unit effects are bounded by ``effect`` on one side.

    Non-superiority runs the upper-tail sharp test on the imputed schedule.
    Non-inferiority runs the negation reduction; for odd statistics this
    equals the lower-tail count on the original schedule.
    """
    _require_ei(stat)
    pv, _ = directed_p_value(
        dataset, effect, stat, design, direction, mode,
        variant=variant, threads=threads, collect_values=False,
    )
    return BoundedTestResult(
        direction=direction,
        effect=effect,
        stat=describe_statistic(stat),
        alpha=alpha,
        pvalue=pv,
        reject=pv.p <= alpha,
    )


@dataclass(frozen=True)
class CIResult:
    """One-sided confidence interval for the maximum (minimum) unit effect.

    MAX_EFFECT intervals are [bound, outer]; MIN_EFFECT intervals are
    [outer, bound]. ``outer`` comes from a declared outcome range and is
    +/-inf when none is declared. ``trace`` records every (phase, tau0, p)
    evaluation; ``boundary_hit`` flags an exact p == alpha evaluation,
    which counts as rejection (membership needs p > alpha strictly).
    """

    target: Target
    bound: float
    alpha: float
    outer: float
    stat: str
    trace: tuple[tuple[str, float, float], ...]
    boundary_hit: bool
    p_at_bound: float

    @property
    def interval(self) -> tuple[float, float]:
        if self.target is Target.MAX_EFFECT:
            return (self.bound, self.outer)
        return (self.outer, self.bound)


def max_effect_outer(dataset: Dataset, outcome_range: tuple[float, float]) -> float:
    """Largest effect any unit could have given a declared outcome range."""
    lo, hi = outcome_range
    controls = dataset.y[dataset.w == 0]
    treated = dataset.y[dataset.w == 1]
    return max(hi - controls.min(), treated.max() - lo)


def min_effect_outer(dataset: Dataset, outcome_range: tuple[float, float]) -> float:
    lo, hi = outcome_range
    controls = dataset.y[dataset.w == 0]
    treated = dataset.y[dataset.w == 1]
    return min(lo - controls.max(), treated.min() - hi)


def _invert_max(dataset, stat, design, alpha, mode, grid_points, tol_scale, threads):
    """Smallest constant shift whose test is not rejected (p > alpha)."""

    trace: list[tuple[str, float, float]] = []
    boundary_hit = False

    def pfun(tau0: float, phase: str) -> float:
        nonlocal boundary_hit
        pv, _ = p_value(
            dataset, ConstantEffect(tau0), stat, design, mode, Tail.UPPER,
            threads=threads, collect_values=False,
        )
        if pv.p == alpha:
            boundary_hit = True
        trace.append((phase, tau0, pv.p))
        return pv.p

    span = float(dataset.y.max() - dataset.y.min()) or 1.0
    lo_edge = float(dataset.y.min()) - span
    hi_edge = float(dataset.y.max()) + span
    grid = np.linspace(lo_edge, hi_edge, grid_points)
    ps = [pfun(t, "grid") for t in grid]

    if any(b < a for a, b in zip(ps, ps[1:])):
        raise NonMonotonePValueError(
            "p(tau0) decreased along the grid; check statistic choice and tolerances"
        )

    first = next((i for i, p in enumerate(ps) if p > alpha), None)
    if first is None:
        # p -> 1 as tau0 grows for EI statistics; extend upward until found.
        step, tau = span, hi_edge
        for _ in range(64):
            tau += step
            step *= 2
            if pfun(tau, "extend") > alpha:
                first, grid, ps = None, None, None
                hi, lo = tau, tau - step / 2
                break
        else:
            raise NonMonotonePValueError("no non-rejected constant shift found")
    if first is not None:
        if first == 0:
            # Grid bottom not rejected: either nothing is ever rejected, or
            # the boundary lies below the grid.
            if isinstance(mode, Exact) and 1.0 / design.size > alpha:
                return -math.inf, tuple(trace), boundary_hit, ps[0]
            step, tau = span, lo_edge
            lo = None
            for _ in range(64):
                tau -= step
                step *= 2
                if pfun(tau, "extend") <= alpha:
                    lo, hi = tau, tau + step / 2
                    break
            if lo is None:
                return -math.inf, tuple(trace), boundary_hit, ps[0]
        else:
            lo, hi = float(grid[first - 1]), float(grid[first])

    tol = tol_scale * span
    p_hi = None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        p_mid = pfun(mid, "bisect")
        if p_mid > alpha:
            hi, p_hi = mid, p_mid
        else:
            lo = mid
    if p_hi is None:
        p_hi = pfun(hi, "confirm")
    return hi, tuple(trace), boundary_hit, p_hi


def invert_ci(
    dataset: Dataset,
    stat: TestStatistic,
    design: Design,
    target: Target = Target.MAX_EFFECT,
    alpha: float = 0.10,
    mode: Mode = Exact(),
    *,
    outcome_range: tuple[float, float] | None = None,
    grid_points: int = 101,
    tol_scale: float = 1e-4,
    threads: int = 1,
) -> CIResult:
    """Invert constant-shift bounded tests into a one-sided CI.

    The rejection boundary of the monotone step function p(tau0) is located
    by a coarse grid sweep and refined by bisection to within
    ``tol_scale * outcome span``. Monotonicity is audited on every grid
    sweep and a violation raises ``NonMonotonePValueError``.
    """
    _require_ei(stat)
    if target is Target.MAX_EFFECT:
        bound, trace, boundary_hit, p_bound = _invert_max(
            dataset, stat, design, alpha, mode, grid_points, tol_scale, threads
        )
        outer = max_effect_outer(dataset, outcome_range) if outcome_range else math.inf
    else:
        bound_neg, trace_neg, boundary_hit, p_bound = _invert_max(
            dataset.negated(), stat.mirrored(), design, alpha, mode,
            grid_points, tol_scale, threads,
        )
        bound = -bound_neg
        trace = tuple((phase, -tau0, p) for phase, tau0, p in trace_neg)
        outer = min_effect_outer(dataset, outcome_range) if outcome_range else -math.inf
    return CIResult(
        target=target,
        bound=bound,
        alpha=alpha,
        outer=outer,
        stat=describe_statistic(stat),
        trace=trace,
        boundary_hit=boundary_hit,
        p_at_bound=p_bound,
    )


@dataclass(frozen=True)
class SimultaneousResult:
    """Intersection-union test of "no positive effects" and "no negative effects"."""

    p_up: PValue
    p_down: PValue
    p_iu: float
    stat: str


def test_simultaneous(
    dataset: Dataset,
    stat: TestStatistic,
    design: Design,
    mode: Mode = Exact(),
    *,
    threads: int = 1,
) -> SimultaneousResult:
    """Both one-sided zero-bound tests; rejects jointly at max(p_up, p_down)."""
    _require_ei(stat)
    up = test_bounded(
        dataset, ConstantEffect(0.0), stat, design,
        Direction.NON_SUPERIORITY, mode=mode, threads=threads,
    )
    down = test_bounded(
        dataset, ConstantEffect(0.0), stat, design,
        Direction.NON_INFERIORITY, mode=mode, threads=threads,
    )
    return SimultaneousResult(
        p_up=up.pvalue,
        p_down=down.pvalue,
        p_iu=max(up.pvalue.p, down.pvalue.p),
        stat=describe_statistic(stat),
    )


@dataclass(frozen=True)
class MonotonicityResult:
    test: BoundedTestResult
    violated: bool


def test_monotonicity(
    dataset: Dataset,
    stat: TestStatistic,
    design: Design,
    direction: Direction = Direction.NON_INFERIORITY,
    alpha: float = 0.05,
    mode: Mode = Exact(),
    *,
    threads: int = 1,
) -> MonotonicityResult:
    """Instrument monotonicity as a zero-bounded null on uptake outcomes.

    Encode the instrument as ``w`` and treatment uptake as ``y``; rejecting
    the zero-bound null in the chosen direction means some unit's uptake
    moved against the assumed sign, i.e. monotonicity is violated.
    """
    res = test_bounded(
        dataset, ConstantEffect(0.0), stat, design, direction,
        alpha=alpha, mode=mode, threads=threads,
    )
    return MonotonicityResult(test=res, violated=res.reject)
