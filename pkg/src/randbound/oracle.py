"""Brute-force oracles used to validate the optimized paths.

Everything here is deliberately naive pure Python sharing only the core
types with the optimized implementations: per-assignment recomputation, no
vectorization, subset enumeration instead of closed forms. Golden values
are frozen in the test suite only after the optimized path agrees with
these oracles.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset, Design, EffectSpec, PairedBlocks, Schedule
from .errors import TooLargeForOracleError
from .impute import ImputationVariant
from .stats import (
    DiffMeans,
    RankSum,
    ScoredSum,
    StephensonRank,
    TestStatistic,
    ThresholdProportion,
    WelchT,
    describe_statistic,
)

_SUBSET_CAP_N = 20
_ENUM_CAP = 10**6
_REL_EPS = 1e-12


@dataclass(frozen=True)
class OracleReport:
    case: str
    optimized: float
    oracle: float
    agreed: bool
    discrepancy: float


def agreement_report(case: str, optimized: float, oracle: float, exact: bool) -> OracleReport:
    """Exact equality for integer-valued statistics, <=1e-10 relative otherwise."""
    if exact:
        agreed = optimized == oracle
        disc = abs(optimized - oracle)
    else:
        disc = abs(optimized - oracle) / max(1.0, abs(oracle))
        agreed = disc <= 1e-10
    return OracleReport(case, optimized, oracle, agreed, disc)


def _realized(w, schedule: Schedule) -> list[float]:
    return [
        float(schedule.y1[i]) if int(w[i]) == 1 else float(schedule.y0[i])
        for i in range(schedule.n)
    ]


def _midranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def stephenson_subset_count(w, schedule: Schedule, subset_size: int) -> float:
    """Count size-s subsets in which a treated unit is (tied for) the largest."""
    n = schedule.n
    if n > _SUBSET_CAP_N:
        raise TooLargeForOracleError(f"subset oracle capped at n={_SUBSET_CAP_N}")
    values = _realized(w, schedule)
    count = 0
    for subset in itertools.combinations(range(n), subset_size):
        top = max(values[i] for i in subset)
        if any(int(w[i]) == 1 and values[i] == top for i in subset):
            count += 1
    return float(count)


def naive_stat_value(stat: TestStatistic, w, schedule: Schedule) -> float:
    """Recompute a statistic from scratch, loops and sorted() only."""
    values = _realized(w, schedule)
    treated = [v for v, wi in zip(values, w) if int(wi) == 1]
    control = [v for v, wi in zip(values, w) if int(wi) == 0]
    if isinstance(stat, DiffMeans):
        return sum(treated) / len(treated) - sum(control) / len(control)
    if isinstance(stat, RankSum):
        ranks = _midranks(values)
        return sum(r for r, wi in zip(ranks, w) if int(wi) == 1)
    if isinstance(stat, StephensonRank):
        return stephenson_subset_count(w, schedule, stat.subset_size)
    if isinstance(stat, ThresholdProportion):
        above_t = sum(1 for v in treated if v > stat.cutoff)
        above_c = sum(1 for v in control if v > stat.cutoff)
        return above_t / len(treated) - above_c / len(control)
    if isinstance(stat, WelchT):
        m1 = sum(treated) / len(treated)
        m0 = sum(control) / len(control)
        v1 = sum((v - m1) ** 2 for v in treated) / (len(treated) - 1)
        v0 = sum((v - m0) ** 2 for v in control) / (len(control) - 1)
        return (m1 - m0) / math.sqrt(v1 / len(treated) + v0 / len(control))
    if isinstance(stat, ScoredSum):
        warr = np.asarray(w, dtype=np.int8)
        q = [float(stat.score(np.array([v]))[0]) for v in values]
        st = sum(qi for qi, wi in zip(q, w) if int(wi) == 1)
        sc = sum(qi for qi, wi in zip(q, w) if int(wi) == 0)
        return stat.a(warr) * st - stat.b(warr) * sc
    raise TypeError(f"no oracle for {describe_statistic(stat)}")


def _naive_assignments(design: Design):
    if isinstance(design, PairedBlocks):
        for bits in itertools.product((0, 1), repeat=design.n_blocks):
            w = [0] * design.n_units
            for bit, (a, b) in zip(bits, design.pairs):
                w[b if bit else a] = 1
            yield w
        return
    for combo in itertools.combinations(range(design.n_units), design.n_treated):
        w = [0] * design.n_units
        for i in combo:
            w[i] = 1
        yield w


def exhaustive_p(
    dataset: Dataset,
    effect: EffectSpec,
    stat: TestStatistic,
    design: Design,
    tail: str = "upper",
    variant: ImputationVariant = ImputationVariant.BOTH_SIDES,
) -> tuple[int, int]:
    """Exact p-value as (numerator, denominator), recomputed independently."""
    if design.size > _ENUM_CAP:
        raise TooLargeForOracleError(f"enumeration oracle capped at {_ENUM_CAP}")

    tau = effect.resolve(dataset.n)
    y0, y1 = [], []
    for i in range(dataset.n):
        yi, wi, ti = float(dataset.y[i]), int(dataset.w[i]), float(tau[i])
        if variant is ImputationVariant.BOTH_SIDES:
            y0.append(yi - ti if wi == 1 else yi)
            y1.append(yi if wi == 1 else yi + ti)
        elif variant is ImputationVariant.CONTROL_BASELINE:
            adj = yi - ti if wi == 1 else yi
            y0.append(adj)
            y1.append(adj)
        else:
            adj = yi if wi == 1 else yi + ti
            y0.append(adj)
            y1.append(adj)
    schedule = Schedule(np.array(y0), np.array(y1))

    t_obs = naive_stat_value(stat, list(dataset.w), schedule)
    exact = stat.boundary(dataset.n) == "exact"
    if exact:
        thr = t_obs
    else:
        eps = _REL_EPS * max(1.0, abs(t_obs))
        thr = t_obs - eps if tail == "upper" else t_obs + eps

    num = den = 0
    for w in _naive_assignments(design):
        t = naive_stat_value(stat, w, schedule)
        den += 1
        if (t >= thr) if tail == "upper" else (t <= thr):
            num += 1
    return num, den


@dataclass(frozen=True)
class EIReport:
    """Outcome of a randomized ordering check for one statistic."""

    stat: str
    trials: int
    n: int
    violations: int
    first_witness: dict | None


def random_ordered_pair(rng: np.random.Generator, n: int, ties: bool) -> tuple[Schedule, Schedule]:
    """A random schedule and a second one weakly above it in the schedule order.

    With ``ties`` the outcomes live on a half-integer lattice so exact ties
    occur often and persist after perturbation. Increments are heavy-tailed
    with an occasional single-coordinate spike, the regime where
    studentized statistics break ordering.
    """
    if ties:
        y0 = rng.integers(-4, 5, n) * 0.5
        y1 = y0 + rng.integers(-2, 3, n) * 0.5
        up = rng.integers(0, 3, n) * 0.5 * (rng.random(n) < 0.6)
        down = rng.integers(0, 3, n) * 0.5 * (rng.random(n) < 0.6)
    else:
        y0 = rng.normal(size=n)
        y1 = y0 + rng.normal(size=n)
        up = rng.exponential(1.0, n) * (rng.random(n) < 0.6)
        down = rng.exponential(1.0, n) * (rng.random(n) < 0.6)
        if rng.random() < 0.4:
            up[rng.integers(n)] += rng.exponential(40.0)
    a = Schedule(y0.astype(float), y1.astype(float))
    b = Schedule(a.y0 - down, a.y1 + up)
    return a, b


def battery(trials: int = 50, seed: int = 0) -> dict:
    """Canned differential-test battery for CI pipelines.

    Sections: tied-Stephenson closed form vs subset enumeration, optimized
    exact p-values vs naive exhaustive recomputation, and ordering checks
    for every statistic family (the studentized statistic is expected to
    produce a violation witness).
    """
    from .core import CompleteRandomization, ConstantEffect
    from .refdist import Exact, p_value
    from .stats import parse_statistic

    rng = np.random.default_rng(seed)
    sections: dict[str, dict] = {}

    reports = []
    for k in range(trials):
        n = int(rng.integers(6, 13))
        s = int(rng.integers(2, min(6, n) + 1))
        w = np.zeros(n, dtype=np.int8)
        w[rng.choice(n, int(rng.integers(1, n)), replace=False)] = 1
        y0 = rng.integers(-3, 4, n) * 0.5
        y1 = y0 + rng.integers(-2, 3, n) * 0.5
        schedule = Schedule(y0.astype(float), y1.astype(float))
        stat = StephensonRank(s)
        reports.append(
            agreement_report(
                f"stephenson n={n} s={s} case={k}",
                stat.value(w, schedule),
                stephenson_subset_count(w, schedule, s),
                exact=True,
            )
        )
    sections["stephenson_subset_count"] = _summarize(reports)

    reports = []
    stats_pool = ["diff-means", "rank-sum", "stephenson:3", "threshold:0"]
    for k in range(trials):
        n = 2 * int(rng.integers(3, 6))
        n_t = n // 2
        design = CompleteRandomization(n, n_t)
        w = np.zeros(n, dtype=np.int8)
        w[rng.choice(n, n_t, replace=False)] = 1
        y = np.round(rng.normal(size=n), 2)
        ids = tuple(f"u{i}" for i in range(n))
        dataset = Dataset(ids, w, y)
        effect = ConstantEffect(float(rng.uniform(-1, 0)))
        stat = parse_statistic(stats_pool[k % len(stats_pool)])
        pv, _ = p_value(dataset, effect, stat, design, Exact(), collect_values=False)
        num, den = exhaustive_p(dataset, effect, stat, design)
        agreed = (pv.numerator, pv.denominator) == (num, den)
        reports.append(
            OracleReport(
                f"exact-p {describe_statistic(stat)} n={n} case={k}",
                float(pv.numerator),
                float(num),
                agreed,
                float(abs(pv.numerator - num)),
            )
        )
    sections["exhaustive_p"] = _summarize(reports)

    design8 = CompleteRandomization(8, 4)
    ei_specs = [
        ("diff-means", False),
        ("rank-sum", True),
        ("stephenson:4", True),
        ("threshold:0", False),
    ]
    ei_section = {}
    for spec, ties in ei_specs:
        rep = ei_property_check(parse_statistic(spec), trials, 8, design8, seed=seed, ties=ties)
        ei_section[spec] = {"violations": rep.violations, "ok": rep.violations == 0}
    welch = ei_property_check(parse_statistic("welch-t"), max(trials, 200), 8, design8, seed=seed)
    ei_section["welch-t"] = {
        "violations": welch.violations,
        "ok": welch.violations > 0,
        "first_witness": welch.first_witness,
    }
    sections["effect_increasing"] = ei_section

    all_ok = (
        sections["stephenson_subset_count"]["all_agreed"]
        and sections["exhaustive_p"]["all_agreed"]
        and all(entry["ok"] for entry in ei_section.values())
    )
    return {"trials": trials, "seed": seed, "all_ok": all_ok, "sections": sections}


def _summarize(reports: list[OracleReport]) -> dict:
    disagreements = [r for r in reports if not r.agreed]
    return {
        "cases": len(reports),
        "all_agreed": not disagreements,
        "disagreements": [
            {"case": r.case, "optimized": r.optimized, "oracle": r.oracle}
            for r in disagreements[:5]
        ],
    }


def ei_property_check(
    stat: TestStatistic,
    trials: int,
    n: int,
    design: Design,
    seed: int = 0,
    ties: bool = False,
) -> EIReport:
    """Check T(w, a) <= T(w, b) over random ordered pairs and all assignments.

    Effect-increasing statistics must show zero violations; for statistics
    without the property the first violating (pair, assignment) found is
    reported as a witness.
    """
    from .refdist import enumerate_assignments

    W = np.array(list(enumerate_assignments(design)), dtype=np.int8)
    rng = np.random.default_rng(seed)
    violations = 0
    witness = None
    for _ in range(trials):
        a, b = random_ordered_pair(rng, n, ties)
        try:
            va = stat.values(W, a)
            vb = stat.values(W, b)
        except Exception:
            continue
        bad = np.flatnonzero(va > vb)
        if bad.size:
            violations += int(bad.size)
            if witness is None:
                j = int(bad[0])
                witness = {
                    "w": W[j].tolist(),
                    "y0_low": a.y0.tolist(),
                    "y1_low": a.y1.tolist(),
                    "y0_high": b.y0.tolist(),
                    "y1_high": b.y1.tolist(),
                    "t_low": float(va[j]),
                    "t_high": float(vb[j]),
                }
    return EIReport(
        stat=describe_statistic(stat),
        trials=trials,
        n=n,
        violations=violations,
        first_witness=witness,
    )
