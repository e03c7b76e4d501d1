"""Exact randomization inference for bounded null hypotheses.

One-sided randomization tests with effect-increasing statistics remain
valid when the sharp null is relaxed to a bounded null (all unit effects
weakly below, or above, the hypothesized vector); inverting them yields
one-sided confidence intervals for the maximum or minimum unit-level
treatment effect.
"""

__version__ = "0.1.0"

from .core import (
    CompleteRandomization,
    ConstantEffect,
    Dataset,
    PairedBlocks,
    PerUnitEffect,
    Schedule,
    ScheduleOrdering,
    compare_schedules,
    design_from_dataset,
    validate_dataset,
)
from .impute import ImputationVariant, impute_schedule, impute_variant
from .infer import (
    BoundedTestResult,
    CIResult,
    Direction,
    MonotonicityResult,
    SimultaneousResult,
    Target,
    invert_ci,
    test_bounded,
    test_monotonicity,
    test_simultaneous,
)
from .refdist import (
    Exact,
    MonteCarlo,
    PValue,
    ReferenceDistribution,
    Tail,
    enumerate_assignments,
    p_value,
    sample_assignments,
)
from .stats import (
    DiffMeans,
    RankSum,
    ScoredSum,
    StephensonRank,
    ThresholdProportion,
    WelchT,
    parse_statistic,
)

__all__ = [
    "BoundedTestResult",
    "CIResult",
    "CompleteRandomization",
    "ConstantEffect",
    "Dataset",
    "DiffMeans",
    "Direction",
    "Exact",
    "ImputationVariant",
    "MonteCarlo",
    "MonotonicityResult",
    "PairedBlocks",
    "PerUnitEffect",
    "PValue",
    "RankSum",
    "ReferenceDistribution",
    "Schedule",
    "ScheduleOrdering",
    "ScoredSum",
    "SimultaneousResult",
    "StephensonRank",
    "Tail",
    "Target",
    "ThresholdProportion",
    "WelchT",
    "compare_schedules",
    "design_from_dataset",
    "enumerate_assignments",
    "impute_schedule",
    "impute_variant",
    "invert_ci",
    "p_value",
    "parse_statistic",
    "sample_assignments",
    "test_bounded",
    "test_monotonicity",
    "test_simultaneous",
    "validate_dataset",
]
