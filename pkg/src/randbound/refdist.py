"""Reference distributions over the assignment space, and p-values.

Exact mode enumerates every admissible assignment once, in a fixed order
(lexicographic treated-index combinations; block-bit order for pairs), so
exported distributions are reproducible artifacts. Monte Carlo mode draws
assignments in fixed-size chunks whose generators are seeded by
(seed, chunk_index), making draw k a pure function of (seed, k) and the
draw stream for J a prefix of the stream for any larger J.

Work is partitioned across threads by chunk; tallies are reduced
commutatively, so results are independent of the thread count.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import Dataset, Design, EffectSpec, PairedBlocks
from .errors import EnumerationTooLargeError, LengthMismatchError
from .impute import ImputationVariant, impute_variant
from .stats import TestStatistic

DEFAULT_ENUMERATION_CAP = 10**8
CHUNK_ROWS = 4096
_CACHE_ROW_LIMIT = 1 << 18

# Relative slack when comparing real-valued statistics at the observed
# boundary; keeps tie counts stable against summation-order rounding.
BOUNDARY_EPS = 1e-12


class Tail:
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class Exact:
    """Full enumeration, refused above ``cap`` assignments."""

    cap: int = DEFAULT_ENUMERATION_CAP


@dataclass(frozen=True)
class MonteCarlo:
    """J seeded draws from the design distribution.

    ``add_one`` switches the estimate from the plain exceedance average to
    (1 + count) / (1 + draws), which is conservative but valid at any J.
    """

    seed: int
    draws: int
    add_one: bool = False

    def __post_init__(self):
        if self.draws < 1:
            raise ValueError("draws must be >= 1")


Mode = Exact | MonteCarlo


def unrank_combination(rank: int, n: int, k: int) -> tuple[int, ...]:
    """The rank-th k-combination of range(n) in lexicographic order."""
    out = []
    x = 0
    for slot in range(k, 0, -1):
        while math.comb(n - x - 1, slot - 1) <= rank:
            rank -= math.comb(n - x - 1, slot - 1)
            x += 1
        out.append(x)
        x += 1
    return tuple(out)


def _complete_chunk(design, combos_iter, m: int) -> np.ndarray | None:
    idx = np.array(list(itertools.islice(combos_iter, m)), dtype=np.intp)
    if idx.size == 0:
        return None
    W = np.zeros((idx.shape[0], design.n_units), dtype=np.int8)
    W[np.arange(idx.shape[0])[:, None], idx] = 1
    return W


def _paired_rows(design: PairedBlocks, start: int, stop: int) -> np.ndarray:
    k = design.n_blocks
    bits = ((np.arange(start, stop, dtype=np.int64)[:, None] >> np.arange(k)) & 1).astype(np.int8)
    first = np.array([p[0] for p in design.pairs])
    second = np.array([p[1] for p in design.pairs])
    W = np.zeros((stop - start, design.n_units), dtype=np.int8)
    W[:, first] = 1 - bits
    W[:, second] = bits
    return W


@lru_cache(maxsize=4)
def _cached_matrix(design) -> np.ndarray:
    chunks = list(_enumeration_chunks(design))
    W = np.concatenate(chunks, axis=0) if len(chunks) > 1 else chunks[0]
    W.setflags(write=False)
    return W


def _enumeration_chunks(design: Design, chunk_rows: int = CHUNK_ROWS):
    if isinstance(design, PairedBlocks):
        for start in range(0, design.size, chunk_rows):
            yield _paired_rows(design, start, min(start + chunk_rows, design.size))
        return
    combos = itertools.combinations(range(design.n_units), design.n_treated)
    while True:
        W = _complete_chunk(design, combos, chunk_rows)
        if W is None:
            return
        yield W


def _assignment_chunks(design: Design, chunk_rows: int = CHUNK_ROWS):
    """Exact-mode chunks, from cache when the space is small."""
    if design.size <= _CACHE_ROW_LIMIT:
        W = _cached_matrix(design)
        for start in range(0, W.shape[0], chunk_rows):
            yield W[start : start + chunk_rows]
    else:
        yield from _enumeration_chunks(design, chunk_rows)


def _sample_chunk(design: Design, seed: int, chunk_index: int, m: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence((seed, chunk_index)))
    if isinstance(design, PairedBlocks):
        bits = rng.integers(0, 2, size=(m, design.n_blocks), dtype=np.int8)
        first = np.array([p[0] for p in design.pairs])
        second = np.array([p[1] for p in design.pairs])
        W = np.zeros((m, design.n_units), dtype=np.int8)
        W[:, first] = 1 - bits
        W[:, second] = bits
        return W
    u = rng.random((m, design.n_units))
    treated = np.argpartition(u, design.n_treated, axis=1)[:, : design.n_treated]
    W = np.zeros((m, design.n_units), dtype=np.int8)
    W[np.arange(m)[:, None], treated] = 1
    return W


def _sampling_chunks(design: Design, seed: int, draws: int, chunk_rows: int = CHUNK_ROWS):
    for chunk_index, start in enumerate(range(0, draws, chunk_rows)):
        yield _sample_chunk(design, seed, chunk_index, min(chunk_rows, draws - start))


def enumerate_assignments(design: Design, cap: int = DEFAULT_ENUMERATION_CAP):
    """Yield each admissible assignment exactly once, in deterministic order."""
    if design.size > cap:
        raise EnumerationTooLargeError(
            f"{design.size} assignments exceed the cap of {cap}; use Monte Carlo mode"
        )
    for W in _assignment_chunks(design):
        yield from W


def sample_assignments(design: Design, seed: int, draws: int):
    """Yield ``draws`` independent uniform draws from the design distribution."""
    for W in _sampling_chunks(design, seed, draws):
        yield from W


@dataclass(frozen=True)
class PValue:
    """Exceedance probability with its raw counts.

    In exact mode p = numerator / denominator identically. In Monte Carlo
    mode numerator is the exceedance count and denominator the draw count;
    with the add-one correction p = (1 + numerator) / (1 + denominator).
    """

    p: float
    numerator: int
    denominator: int
    tail: str
    mode: str
    add_one: bool = False


@dataclass(frozen=True)
class ReferenceDistribution:
    """Summary of T(w*, schedule) across the assignment space."""

    total: int
    mode: str
    t_obs: float
    value_counts: tuple[tuple[float, int], ...] | None = field(default=None, repr=False)

    def to_csv(self, path) -> None:
        if self.value_counts is None:
            raise ValueError("distribution values were not collected")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("value,count\n")
            for value, count in self.value_counts:
                fh.write(f"{value!r},{count}\n")


def boundary_threshold(t_obs: float, boundary: str, tail: str) -> float:
    if boundary == "exact":
        return t_obs
    eps = BOUNDARY_EPS * max(1.0, abs(t_obs))
    return t_obs - eps if tail == Tail.UPPER else t_obs + eps


def _map_chunks(chunks, fn, threads: int):
    if threads <= 1:
        for chunk in chunks:
            yield fn(chunk)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        pending = set()
        for chunk in chunks:
            pending.add(pool.submit(fn, chunk))
            if len(pending) >= 2 * threads:
                done, pending = wait(pending, return_when=FIRST_COMPLETED)
                yield from (f.result() for f in done)
        for f in pending:
            yield f.result()


def p_value(
    dataset: Dataset,
    effect: EffectSpec,
    stat: TestStatistic,
    design: Design,
    mode: Mode = Exact(),
    tail: str = Tail.UPPER,
    *,
    variant: ImputationVariant = ImputationVariant.BOTH_SIDES,
    threads: int = 1,
    collect_values: bool | None = None,
) -> tuple[PValue, ReferenceDistribution]:
    """Randomization p-value of the sharp null given by ``effect``.

    Upper tail counts assignments with T(w*, schedule) >= t_obs, lower tail
    counts <=. Ties at the boundary are included; real-valued statistics
    get a relative-epsilon guard so counts do not depend on summation
    order, while rank-type statistics compare exactly.
    """
    if design.n_units != dataset.n:
        raise LengthMismatchError("design and dataset sizes differ")
    design.check_assignment(dataset.w)
    if tail not in (Tail.UPPER, Tail.LOWER):
        raise ValueError(f"unknown tail {tail!r}")

    schedule = impute_variant(dataset, effect, variant)
    t_obs = stat.value(dataset.w, schedule)
    thr = boundary_threshold(t_obs, stat.boundary(dataset.n), tail)

    if isinstance(mode, Exact):
        if design.size > mode.cap:
            raise EnumerationTooLargeError(
                f"{design.size} assignments exceed the cap of {mode.cap}; "
                "use Monte Carlo mode"
            )
        chunks = _assignment_chunks(design)
        total = design.size
        mode_name = "exact"
    else:
        chunks = _sampling_chunks(design, mode.seed, mode.draws)
        total = mode.draws
        mode_name = "mc"

    if collect_values is None:
        collect_values = total <= _CACHE_ROW_LIMIT

    def eval_chunk(W):
        values = stat.values(W, schedule)
        exceed = int((values >= thr).sum() if tail == Tail.UPPER else (values <= thr).sum())
        if collect_values:
            uniq, counts = np.unique(values, return_counts=True)
            return exceed, list(zip(uniq.tolist(), counts.tolist()))
        return exceed, None

    count = 0
    merged: dict[float, int] = {}
    for exceed, pairs in _map_chunks(chunks, eval_chunk, threads):
        count += exceed
        if pairs:
            for v, c in pairs:
                merged[v] = merged.get(v, 0) + c

    if isinstance(mode, Exact):
        p = count / total
        add_one = False
    else:
        add_one = mode.add_one
        p = (1 + count) / (1 + total) if add_one else count / total

    pv = PValue(p=p, numerator=count, denominator=total, tail=tail, mode=mode_name, add_one=add_one)
    dist = ReferenceDistribution(
        total=total,
        mode=mode_name,
        t_obs=t_obs,
        value_counts=tuple(sorted(merged.items())) if collect_values else None,
    )
    return pv, dist
