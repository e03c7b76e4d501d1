"""Core domain types: datasets, designs, schedules, and effect vectors.

All types are immutable after construction (ndarray fields are marked
read-only) and safe to share across threads. Unit order is ingestion order
and serves as the canonical index everywhere; blocks are ordered by first
appearance so paired enumerations are reproducible.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateBlockError,
    DegenerateDesignError,
    DuplicateIdError,
    LengthMismatchError,
    MissingBlockError,
    NonBinaryTreatmentError,
    NonFiniteOutcomeError,
)


def _frozen(a: np.ndarray, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """Observed units: treatment indicator ``w``, outcome ``y``, optional blocks."""

    ids: tuple[str, ...]
    w: np.ndarray
    y: np.ndarray
    blocks: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "w", _frozen(self.w, np.int8))
        object.__setattr__(self, "y", _frozen(self.y, np.float64))

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def n_treated(self) -> int:
        return int(self.w.sum())

    @property
    def has_blocks(self) -> bool:
        return self.blocks is not None

    def negated(self) -> "Dataset":
        """Outcomes multiplied by -1 (non-inferiority reduction)."""
        return Dataset(self.ids, self.w, -self.y, self.blocks)

    def block_order(self) -> list[str]:
        """Distinct block labels in order of first appearance."""
        seen: dict[str, None] = {}
        for b in self.blocks or ():
            seen.setdefault(b)
        return list(seen)


def validate_dataset(rows) -> Dataset:
    """Build a validated :class:`Dataset` from parsed row mappings.

    Each row must have keys ``id``, ``w``, ``y`` and may have ``block``
    (``None`` or missing meaning unblocked). Raises a structured
    :class:`~randbound.errors.DataError` subclass on the first violation.
    """
    rows = list(rows)
    if not rows:
        raise DegenerateDesignError("no units supplied")

    ids, ws, ys, blocks = [], [], [], []
    for i, row in enumerate(rows):
        ids.append(str(row["id"]))
        w = row["w"]
        if isinstance(w, bool) or w not in (0, 1):
            raise NonBinaryTreatmentError(
                f"unit {ids[-1]!r} (row {i}): treatment must be 0 or 1, got {w!r}"
            )
        ws.append(int(w))
        y = float(row["y"])
        if not math.isfinite(y):
            raise NonFiniteOutcomeError(f"unit {ids[-1]!r} (row {i}): outcome {y!r}")
        ys.append(y)
        blocks.append(row.get("block"))

    if len(set(ids)) != len(ids):
        dupes = sorted({u for u in ids if ids.count(u) > 1})
        raise DuplicateIdError(f"duplicate unit ids: {dupes}")

    labelled = [b is not None for b in blocks]
    if any(labelled) and not all(labelled):
        missing = [ids[i] for i, has in enumerate(labelled) if not has]
        raise MissingBlockError(f"units without a block label: {missing}")

    block_tuple: tuple[str, ...] | None = None
    if all(labelled):
        block_tuple = tuple(str(b) for b in blocks)
        members: dict[str, list[int]] = {}
        for i, b in enumerate(block_tuple):
            members.setdefault(b, []).append(i)
        for label, idx in members.items():
            n_t = sum(ws[i] for i in idx)
            if len(idx) < 2 or n_t == 0 or n_t == len(idx):
                raise DegenerateBlockError(
                    f"block {label!r} needs >=2 units with both arms present"
                )

    return Dataset(tuple(ids), np.array(ws), np.array(ys), block_tuple)


@dataclass(frozen=True)
class CompleteRandomization:
    """Fixed number of treated units drawn from n; space size C(n, n_treated)."""

    n_units: int
    n_treated: int

    def __post_init__(self):
        if not 0 < self.n_treated < self.n_units:
            raise DegenerateDesignError(
                f"need 0 < n_treated < n, got {self.n_treated} of {self.n_units}"
            )

    @property
    def size(self) -> int:
        return math.comb(self.n_units, self.n_treated)

    def check_assignment(self, w: np.ndarray) -> None:
        if len(w) != self.n_units:
            raise LengthMismatchError("assignment length does not match design")
        if int(np.sum(w)) != self.n_treated:
            raise DegenerateDesignError(
                "assignment treats a different number of units than the design fixes"
            )


@dataclass(frozen=True)
class PairedBlocks:
    """1:1 matched pairs; each pair has exactly one treated unit; space size 2^K.

    ``pairs[k]`` holds the two unit indices of block k in first-appearance
    order; orientation bit 0 treats the first-listed unit.
    """

    n_units: int
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = [i for p in self.pairs for i in p]
        if sorted(seen) != list(range(self.n_units)):
            raise DegenerateDesignError("pairs must cover every unit exactly once")

    @property
    def n_blocks(self) -> int:
        return len(self.pairs)

    @property
    def n_treated(self) -> int:
        return len(self.pairs)

    @property
    def size(self) -> int:
        return 2 ** len(self.pairs)

    def check_assignment(self, w: np.ndarray) -> None:
        if len(w) != self.n_units:
            raise LengthMismatchError("assignment length does not match design")
        for a, b in self.pairs:
            if int(w[a]) + int(w[b]) != 1:
                raise DegenerateDesignError(
                    "assignment must treat exactly one unit per pair"
                )


Design = CompleteRandomization | PairedBlocks


def design_from_dataset(dataset: Dataset) -> Design:
    """Paired design when block labels are present, else complete randomization."""
    if not dataset.has_blocks:
        return CompleteRandomization(dataset.n, dataset.n_treated)

    members: dict[str, list[int]] = {}
    for i, b in enumerate(dataset.blocks):
        members.setdefault(b, []).append(i)
    pairs = []
    for label in dataset.block_order():
        idx = members[label]
        if len(idx) != 2:
            raise DegenerateBlockError(
                f"paired design needs exactly 2 units per block; block {label!r} has {len(idx)}"
            )
        pairs.append(tuple(idx))
    return PairedBlocks(dataset.n, tuple(pairs))


@dataclass(frozen=True)
class Schedule:
    """A full potential-outcome table: per-unit outcomes under control and treatment.

    ``tau`` is stored explicitly: double rounding makes ``y1 - y0`` differ
    from the hypothesized effect in the last ulp, while the observed-side
    columns must stay bit-identical to the data they came from.
    """

    y0: np.ndarray
    y1: np.ndarray
    tau: np.ndarray = None

    def __post_init__(self):
        y0 = _frozen(self.y0, np.float64)
        y1 = _frozen(self.y1, np.float64)
        if y0.shape != y1.shape or y0.ndim != 1:
            raise LengthMismatchError("schedule columns must be equal-length vectors")
        if not (np.isfinite(y0).all() and np.isfinite(y1).all()):
            raise NonFiniteOutcomeError("schedule entries must be finite")
        tau = self.tau if self.tau is not None else y1 - y0
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "tau", _frozen(tau, np.float64))

    @property
    def n(self) -> int:
        return len(self.y0)

    def realized(self, w: np.ndarray) -> np.ndarray:
        """Observed outcome vector under assignment ``w``."""
        return np.where(np.asarray(w) == 1, self.y1, self.y0)

    def negated(self) -> "Schedule":
        return Schedule(-self.y0, -self.y1, -self.tau)


class ScheduleOrdering(enum.Enum):
    LESS_OR_EQUAL = "less_or_equal"
    GREATER_OR_EQUAL = "greater_or_equal"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


def compare_schedules(a: Schedule, b: Schedule) -> ScheduleOrdering:
    """Partial order: a <= b iff every y1 is <= and every y0 is >= b's."""
    if a.n != b.n:
        raise LengthMismatchError(f"schedule lengths differ: {a.n} vs {b.n}")
    le = bool((a.y1 <= b.y1).all() and (a.y0 >= b.y0).all())
    ge = bool((b.y1 <= a.y1).all() and (b.y0 >= a.y0).all())
    if le and ge:
        return ScheduleOrdering.EQUAL
    if le:
        return ScheduleOrdering.LESS_OR_EQUAL
    if ge:
        return ScheduleOrdering.GREATER_OR_EQUAL
    return ScheduleOrdering.INCOMPARABLE


@dataclass(frozen=True)
class ConstantEffect:
    """All units share one hypothesized effect."""

    tau0: float

    def __post_init__(self):
        if not math.isfinite(self.tau0):
            raise NonFiniteOutcomeError(f"effect must be finite, got {self.tau0!r}")

    def resolve(self, n: int) -> np.ndarray:
        return np.full(n, float(self.tau0))

    def negated(self) -> "ConstantEffect":
        return ConstantEffect(-self.tau0)


@dataclass(frozen=True)
class PerUnitEffect:
    """One hypothesized effect per unit, in unit order."""

    tau0: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = _frozen(self.tau0, np.float64)
        if arr.ndim != 1:
            raise LengthMismatchError("per-unit effects must be a vector")
        if not np.isfinite(arr).all():
            raise NonFiniteOutcomeError("per-unit effects must be finite")
        object.__setattr__(self, "tau0", arr)

    def resolve(self, n: int) -> np.ndarray:
        if len(self.tau0) != n:
            raise LengthMismatchError(
                f"effect vector has length {len(self.tau0)}, dataset has {n} units"
            )
        return np.array(self.tau0)

    def negated(self) -> "PerUnitEffect":
        return PerUnitEffect(-self.tau0)


EffectSpec = ConstantEffect | PerUnitEffect
