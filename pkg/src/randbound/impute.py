"""Null imputation: fill the unobserved potential-outcome column from a sharp null.

The default fills both columns around the observed data: a treated unit's
control outcome is imputed as y - tau0, a control unit's treated outcome as
y + tau0. Two single-baseline variants (adjust one column and test it
against the zero null) exist only to reproduce the classical
adjusted-outcome procedure; they are gated behind an explicit flag.
"""

from __future__ import annotations

import enum

import numpy as np

from .core import Dataset, EffectSpec, Schedule


class ImputationVariant(enum.Enum):
    BOTH_SIDES = "both"
    CONTROL_BASELINE = "control-baseline"
    TREATED_BASELINE = "treated-baseline"


def impute_schedule(dataset: Dataset, effect: EffectSpec) -> Schedule:
    """Impute the full schedule under a sharp null.

    The observed column is carried over bit-exactly, the missing column is
    filled per the case equations, and the stored effect vector equals the
    hypothesized one exactly.
    """
    tau = effect.resolve(dataset.n)
    treated = dataset.w == 1
    y0 = np.where(treated, dataset.y - tau, dataset.y)
    y1 = np.where(treated, dataset.y, dataset.y + tau)
    return Schedule(y0, y1, tau)


def impute_variant(
    dataset: Dataset, effect: EffectSpec, variant: ImputationVariant
) -> Schedule:
    """Imputation under a single-baseline variant.

    CONTROL_BASELINE adjusts outcomes to their hypothesized control values
    (y - w*tau0) and returns the no-effect schedule of the adjusted
    outcomes; TREATED_BASELINE mirrors it with y + (1-w)*tau0. Downstream
    tests on these schedules are zero-null tests of the adjusted data.
    """
    if variant is ImputationVariant.BOTH_SIDES:
        return impute_schedule(dataset, effect)
    tau = effect.resolve(dataset.n)
    treated = dataset.w == 1
    if variant is ImputationVariant.CONTROL_BASELINE:
        adjusted = np.where(treated, dataset.y - tau, dataset.y)
    else:
        adjusted = np.where(treated, dataset.y, dataset.y + tau)
    return Schedule(adjusted, adjusted, np.zeros(dataset.n))
