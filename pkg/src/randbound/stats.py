"""Test statistics T(w, schedule) over assignment vectors.

Every statistic evaluates both a single assignment (``value``) and a matrix
of assignments (``values``, one row per assignment) through the same code
path, so an assignment that reappears inside an enumeration reproduces the
observed value bit-for-bit.

The ``ei`` flag marks the effect-increasing family: statistics weakly
increasing in treated potential outcomes and weakly decreasing in control
potential outcomes. Bounded-null machinery refuses statistics without it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import rankdata

from .core import Schedule
from .errors import (
    ArmTooSmallError,
    EmptyArmError,
    ParseError,
    SubsetSizeOutOfRangeError,
    ZeroVarianceError,
)

# Largest integer float64 represents exactly; above it integer-valued
# statistics fall back to tolerance-based boundary comparison.
_EXACT_FLOAT_LIMIT = 2**53


def realized_matrix(W: np.ndarray, schedule: Schedule) -> np.ndarray:
    """Outcomes revealed by each assignment row; pure selection, no arithmetic."""
    return np.where(W == 1, schedule.y1[None, :], schedule.y0[None, :])


def _as_matrix(w) -> np.ndarray:
    W = np.asarray(w, dtype=np.int8)
    return W[None, :] if W.ndim == 1 else W


def _arm_counts(W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n_t = W.sum(axis=1, dtype=np.int64)
    n_c = W.shape[1] - n_t
    if (n_t == 0).any() or (n_c == 0).any():
        raise EmptyArmError("assignment leaves an arm empty")
    return n_t, n_c


class TestStatistic:
    """Base class; subclasses set ``name`` and ``ei`` and implement ``values``."""

    name: str
    ei: bool

    def values(self, W: np.ndarray, schedule: Schedule) -> np.ndarray:
        raise NotImplementedError

    def value(self, w, schedule: Schedule) -> float:
        return float(self.values(_as_matrix(w), schedule)[0])

    def mirrored(self) -> "TestStatistic":
        """Statistic to apply to negated outcomes in the non-inferiority reduction."""
        return self

    def boundary(self, n: int) -> str:
        """Comparison rule at the observed-value boundary: 'exact' or 'relative'."""
        return "relative"


@dataclass(frozen=True)
class DiffMeans(TestStatistic):
    """Treated minus control mean of realized outcomes."""

    name = "diff-means"
    ei = True

    def values(self, W: np.ndarray, schedule: Schedule) -> np.ndarray:
        W = _as_matrix(W)
        n_t, n_c = _arm_counts(W)
        Wf = W.astype(np.float64)
        treated_sum = Wf @ schedule.y1
        control_sum = (1.0 - Wf) @ schedule.y0
        return treated_sum / n_t - control_sum / n_c


@dataclass(frozen=True)
class ScoredSum(TestStatistic):
    """a(w) * sum of treated scores - b(w) * sum of control scores.

    ``score`` must be non-decreasing and accept ndarrays; ``a`` and ``b``
    must be non-negative functions of the assignment vector. Those
    preconditions, not checkable here, are what make the statistic
    effect-increasing.
    """

    score: Callable[[np.ndarray], np.ndarray]
    a: Callable[[np.ndarray], float]
    b: Callable[[np.ndarray], float]

    name = "scored-sum"
    ei = True

    def values(self, W: np.ndarray, schedule: Schedule) -> np.ndarray:
        W = _as_matrix(W)
        q1 = np.asarray(self.score(schedule.y1), dtype=np.float64)
        q0 = np.asarray(self.score(schedule.y0), dtype=np.float64)
        out = np.empty(W.shape[0])
        for j, row in enumerate(W):
            t = row == 1
            out[j] = self.a(row) * q1[t].sum() - self.b(row) * q0[~t].sum()
        return out


@dataclass(frozen=True)
class RankSum(TestStatistic):
    """Sum of treated mid-ranks; ties get the average of their rank span."""

    name = "rank-sum"
    ei = True

    def values(self, W: np.ndarray, schedule: Schedule) -> np.ndarray:
        W = _as_matrix(W)
        realized = realized_matrix(W, schedule)
        ranks = rankdata(realized, method="average", axis=1)
        return (ranks * W).sum(axis=1)

    def boundary(self, n: int) -> str:
        # Mid-rank sums are half-integers: exactly representable.
        return "exact"


@dataclass(frozen=True)
class StephensonRank(TestStatistic):
    """Count of size-s index subsets whose largest realized outcome is treated.

    Computed as sum of C(pos, s-1) over treated units, where pos is the
    unit's position (0-based) after a stable sort by (outcome, treated
    last). With no ties this is the classic score sum C(rank-1, s-1); with
    ties, putting treated units after tied controls makes the telescoped
    binomial sum count exactly the subsets in which a treated unit is tied
    for the maximum.
    """

    subset_size: int

    name = "stephenson"
    ei = True

    def __post_init__(self):
        if self.subset_size < 2:
            raise SubsetSizeOutOfRangeError(
                f"subset size must be >= 2, got {self.subset_size}"
            )

    def _scores(self, n: int) -> np.ndarray:
        return np.array(
            [math.comb(k, self.subset_size - 1) for k in range(n)], dtype=np.float64
        )

    def values(self, W: np.ndarray, schedule: Schedule) -> np.ndarray:
        W = _as_matrix(W)
        n = W.shape[1]
        if self.subset_size > n:
            raise SubsetSizeOutOfRangeError(
                f"subset size {self.subset_size} exceeds sample size {n}"
            )
        realized = realized_matrix(W, schedule)
        # Stable two-pass argsort = row-wise lexsort by (outcome, w).
        by_w = np.argsort(W, axis=1, kind="stable")
        outcome_in_w_order = np.take_along_axis(realized, by_w, axis=1)
        by_outcome = np.argsort(outcome_in_w_order, axis=1, kind="stable")
        order = np.take_along_axis(by_w, by_outcome, axis=1)
        w_sorted = np.take_along_axis(np.broadcast_to(W, realized.shape), order, axis=1)
        return w_sorted.astype(np.float64) @ self._scores(n)

    def boundary(self, n: int) -> str:
        if math.comb(n - 1, self.subset_size - 1) <= _EXACT_FLOAT_LIMIT:
            return "exact"
        return "relative"


@dataclass(frozen=True)
class ThresholdProportion(TestStatistic):
    """Treated minus control proportion of outcomes strictly above a cutoff.

    Boundary ties count as not exceeding. Under the non-inferiority
    reduction the cutoff mirrors to -c, so the mirrored statistic counts
    outcomes strictly below c on the original scale.
    """

    cutoff: float

    name = "threshold"
    ei = True

    def values(self, W: np.ndarray, schedule: Schedule) -> np.ndarray:
        W = _as_matrix(W)
        n_t, n_c = _arm_counts(W)
        Wf = W.astype(np.float64)
        exceed1 = (schedule.y1 > self.cutoff).astype(np.float64)
        exceed0 = (schedule.y0 > self.cutoff).astype(np.float64)
        return (Wf @ exceed1) / n_t - ((1.0 - Wf) @ exceed0) / n_c

    def mirrored(self) -> "ThresholdProportion":
        return ThresholdProportion(-self.cutoff)


@dataclass(frozen=True)
class WelchT(TestStatistic):
    """Difference of means studentized by the unpooled standard error.

    Not effect-increasing: inflating a single treated outcome can grow the
    treated standard deviation faster than the mean, shrinking the
    statistic. Bounded-null tests therefore refuse it.
    """

    name = "welch-t"
    ei = False

    def values(self, W: np.ndarray, schedule: Schedule) -> np.ndarray:
        W = _as_matrix(W)
        n_t, n_c = _arm_counts(W)
        if (n_t < 2).any() or (n_c < 2).any():
            raise ArmTooSmallError("both arms need >= 2 units")
        Wf = W.astype(np.float64)
        s1 = Wf @ schedule.y1
        q1 = Wf @ (schedule.y1**2)
        s0 = (1.0 - Wf) @ schedule.y0
        q0 = (1.0 - Wf) @ (schedule.y0**2)
        m1, m0 = s1 / n_t, s0 / n_c
        v1 = np.maximum(q1 - n_t * m1**2, 0.0) / (n_t - 1)
        v0 = np.maximum(q0 - n_c * m0**2, 0.0) / (n_c - 1)
        if (v1 == 0).any() or (v0 == 0).any():
            raise ZeroVarianceError("one arm has zero variance")
        return (m1 - m0) / np.sqrt(v1 / n_t + v0 / n_c)


def arm_mean_scalings() -> tuple[Callable, Callable]:
    """The 1/n_T, 1/n_C scalings that turn a scored sum into a mean difference."""
    return (lambda w: 1.0 / int(np.sum(w))), (lambda w: 1.0 / int(len(w) - np.sum(w)))


def parse_statistic(spec: str) -> TestStatistic:
    """Parse a CLI statistic spec: diff-means | rank-sum | stephenson:S | threshold:C | welch-t."""
    kind, _, arg = spec.partition(":")
    if kind == "diff-means":
        return DiffMeans()
    if kind == "rank-sum":
        return RankSum()
    if kind == "welch-t":
        return WelchT()
    if kind == "stephenson":
        try:
            return StephensonRank(int(arg))
        except ValueError:
            raise ParseError(f"stephenson needs an integer subset size, got {arg!r}")
    if kind == "threshold":
        try:
            return ThresholdProportion(float(arg))
        except ValueError:
            raise ParseError(f"threshold needs a numeric cutoff, got {arg!r}")
    raise ParseError(f"unknown statistic {spec!r}")


def describe_statistic(stat: TestStatistic) -> str:
    """Round-trippable spec string for result echoes."""
    if isinstance(stat, StephensonRank):
        return f"stephenson:{stat.subset_size}"
    if isinstance(stat, ThresholdProportion):
        return f"threshold:{stat.cutoff:g}"
    return stat.name
