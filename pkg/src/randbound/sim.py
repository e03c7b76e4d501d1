"""Monte-Carlo studies: size distortion of the t test, conservativeness of
bounded-null tests, and coverage of max-effect confidence intervals.

Replications are embarrassingly parallel in principle; every replication
draws its own generator from (seed, replication index), so reports are
bit-reproducible and independent of any partitioning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.stats import t as student_t

from .core import ConstantEffect, CompleteRandomization, Dataset
from .errors import DegenerateScenarioError, ParseError
from .infer import Target, invert_ci
from .refdist import Exact, Tail, p_value
from .stats import parse_statistic

# The reference simulation's code body draws Beta(0.1, 5) although its
# preamble assigns shape (0.2, 20); the executed draw is what produces the
# reported rejection rates, so scenarios default to it and reports carry
# the discrepancy note.
BETA_SHAPE_EXECUTED = (0.1, 5.0)
BETA_SHAPE_PREAMBLE = (0.2, 20.0)


def beta_two_gammas(rng: np.random.Generator, a: float, b: float, size) -> np.ndarray:
    """Beta(a, b) sampled as X/(X+Y) with X~Gamma(a), Y~Gamma(b)."""
    x = rng.gamma(a, size=size)
    y = rng.gamma(b, size=size)
    return x / (x + y)


def _rep_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, rep)))


@dataclass(frozen=True)
class Scenario:
    """One simulation configuration; unused fields are ignored by each kind."""

    kind: str
    reps: int = 1000
    seed: int = 0
    alpha: float = 0.05
    # skewed two-group t-test scenario
    n_small: int = 30
    n_large: int = 1000
    beta_a: float = BETA_SHAPE_EXECUTED[0]
    beta_b: float = BETA_SHAPE_EXECUTED[1]
    alphas: tuple[float, ...] = (0.01, 0.05)
    mc_draws: int = 199
    include_permutation: bool = True
    # randomized-experiment scenarios
    n_units: int = 16
    n_treated: int = 8
    stats: tuple[str, ...] = ("diff-means",)
    effects: str = "uniform:-1:0"
    baseline: str = "normal:0:1"
    null_tau0: float = 0.0
    crosscheck: int = 3
    collect_bounds: bool = False

    def __post_init__(self):
        if self.reps < 1:
            raise DegenerateScenarioError("replications must be >= 1")
        if not 0 < self.alpha < 1:
            raise DegenerateScenarioError("alpha must be in (0, 1)")
        if self.kind == "ttest_failure":
            if min(self.n_small, self.n_large) < 2:
                raise DegenerateScenarioError("both groups need >= 2 units")
            if min(self.beta_a, self.beta_b) <= 0:
                raise DegenerateScenarioError("beta shapes must be positive")
        elif self.kind in ("conservativeness", "ci_coverage"):
            if not 0 < self.n_treated < self.n_units:
                raise DegenerateScenarioError("need 0 < n_treated < n_units")
        else:
            raise DegenerateScenarioError(f"unknown scenario kind {self.kind!r}")


@dataclass(frozen=True)
class SimulationReport:
    kind: str
    reps: int
    seed: int
    rates: dict[str, float]
    standard_errors: dict[str, float]
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "reps": self.reps,
            "seed": self.seed,
            "rates": dict(self.rates),
            "standard_errors": dict(self.standard_errors),
            "metadata": dict(self.metadata),
        }


def _rate_se(rate: float, reps: int) -> float:
    return math.sqrt(rate * (1 - rate) / reps)


def _draw_effects(rng: np.random.Generator, spec: str, n: int) -> np.ndarray:
    kind, *args = spec.split(":")
    if kind == "uniform":
        lo, hi = float(args[0]), float(args[1])
        return rng.uniform(lo, hi, n)
    if kind == "constant":
        return np.full(n, float(args[0]))
    if kind == "pocket":
        # A small fraction of units gets a distinct effect, the rest a base one.
        base, pocket, frac = float(args[0]), float(args[1]), float(args[2])
        tau = np.full(n, base)
        k = max(1, int(round(frac * n)))
        tau[rng.choice(n, k, replace=False)] = pocket
        return tau
    if kind == "exponential":
        return rng.exponential(float(args[0]), n)
    raise DegenerateScenarioError(f"unknown effect generator {spec!r}")


def _draw_baseline(rng: np.random.Generator, spec: str, n: int) -> np.ndarray:
    kind, *args = spec.split(":")
    if kind == "normal":
        return rng.normal(float(args[0]), float(args[1]), n)
    if kind == "uniform":
        return rng.uniform(float(args[0]), float(args[1]), n)
    raise DegenerateScenarioError(f"unknown baseline generator {spec!r}")


def _welch_two_sided(t_stats: np.ndarray, dfs: np.ndarray) -> np.ndarray:
    return 2.0 * student_t.sf(np.abs(t_stats), dfs)


def run_ttest_failure(scenario: Scenario) -> SimulationReport:
    """Two-sided Welch t rejection rates under a true null with skewed data
    and unequal group sizes, beside a permutation difference-of-means
    companion on the same draws."""
    n1, n2 = scenario.n_small, scenario.n_large
    n = n1 + n2
    t_list, df_list = [], []
    perm_counts = {a: 0 for a in scenario.alphas}
    j = scenario.mc_draws

    for rep in range(scenario.reps):
        rng = _rep_rng(scenario.seed, rep)
        ys = beta_two_gammas(rng, scenario.beta_a, scenario.beta_b, n)
        treated_idx = rng.choice(n, n1, replace=False)
        mask = np.zeros(n, dtype=bool)
        mask[treated_idx] = True
        g1, g2 = ys[mask], ys[~mask]

        m1, m2 = g1.mean(), g2.mean()
        v1, v2 = g1.var(ddof=1), g2.var(ddof=1)
        se2 = v1 / n1 + v2 / n2
        t_list.append((m1 - m2) / math.sqrt(se2))
        df_list.append(se2**2 / ((v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1)))

        if scenario.include_permutation:
            # Two-sided permutation test of |mean difference|; group sums
            # determine the statistic since the pooled total is fixed.
            total = ys.sum()
            scale = 1 / n1 + 1 / n2
            t_obs = g1.sum() * scale - total / n2
            u = rng.random((j, n))
            idx = np.argpartition(u, n1, axis=1)[:, :n1]
            t_star = ys[idx].sum(axis=1) * scale - total / n2
            eps = 1e-12 * max(1.0, abs(t_obs))
            p_hat = float((np.abs(t_star) >= abs(t_obs) - eps).mean())
            for a in scenario.alphas:
                if p_hat <= a:
                    perm_counts[a] += 1

    welch_p = _welch_two_sided(np.array(t_list), np.array(df_list))
    rates, ses = {}, {}
    for a in scenario.alphas:
        r = float((welch_p <= a).mean())
        rates[f"welch_alpha_{a:g}"] = r
        ses[f"welch_alpha_{a:g}"] = _rate_se(r, scenario.reps)
        if scenario.include_permutation:
            rp = perm_counts[a] / scenario.reps
            rates[f"perm_alpha_{a:g}"] = rp
            ses[f"perm_alpha_{a:g}"] = _rate_se(rp, scenario.reps)

    return SimulationReport(
        kind=scenario.kind,
        reps=scenario.reps,
        seed=scenario.seed,
        rates=rates,
        standard_errors=ses,
        metadata={
            "group_sizes": [n1, n2],
            "beta_shape": [scenario.beta_a, scenario.beta_b],
            "beta_shape_preamble_variant": list(BETA_SHAPE_PREAMBLE),
            "beta_shape_note": (
                "reference code body draws Beta(0.1, 5) although its preamble "
                "assigns (0.2, 20); the executed draw is reproduced"
            ),
            "permutation_draws": j if scenario.include_permutation else None,
        },
    )


def _experiment_rep(scenario: Scenario, rep: int):
    rng = _rep_rng(scenario.seed, rep)
    n = scenario.n_units
    y0 = _draw_baseline(rng, scenario.baseline, n)
    tau = _draw_effects(rng, scenario.effects, n)
    y1 = y0 + tau
    w = np.zeros(n, dtype=np.int8)
    w[rng.choice(n, scenario.n_treated, replace=False)] = 1
    y = np.where(w == 1, y1, y0)
    ids = tuple(f"u{i}" for i in range(n))
    return Dataset(ids, w, y), tau


def run_conservativeness(scenario: Scenario) -> SimulationReport:
    """Rejection rate of the bounded test when the generator respects (or
    deliberately violates) the bound."""
    stats = [parse_statistic(s) for s in scenario.stats]
    design = CompleteRandomization(scenario.n_units, scenario.n_treated)
    effect = ConstantEffect(scenario.null_tau0)
    rejects = {s: 0 for s in scenario.stats}

    for rep in range(scenario.reps):
        dataset, _ = _experiment_rep(scenario, rep)
        for name, stat in zip(scenario.stats, stats):
            pv, _ = p_value(
                dataset, effect, stat, design, Exact(), Tail.UPPER,
                collect_values=False,
            )
            if pv.p <= scenario.alpha:
                rejects[name] += 1

    rates = {f"reject_{s}": rejects[s] / scenario.reps for s in scenario.stats}
    ses = {k: _rate_se(r, scenario.reps) for k, r in rates.items()}
    return SimulationReport(
        kind=scenario.kind,
        reps=scenario.reps,
        seed=scenario.seed,
        rates=rates,
        standard_errors=ses,
        metadata={
            "alpha": scenario.alpha,
            "null_tau0": scenario.null_tau0,
            "effects": scenario.effects,
            "baseline": scenario.baseline,
            "design": [scenario.n_units, scenario.n_treated],
        },
    )


def run_ci_coverage(scenario: Scenario) -> SimulationReport:
    """Coverage of the one-sided max-effect CI: fraction of replications
    whose true maximum effect is not rejected.

    The event L <= tau_max equals p(tau_max) > alpha because the
    non-rejected set is a half-interval; the equality is cross-checked by
    running the full inversion on the first ``crosscheck`` replications.
    """
    stats = [parse_statistic(s) for s in scenario.stats]
    design = CompleteRandomization(scenario.n_units, scenario.n_treated)
    covered = {s: 0 for s in scenario.stats}
    bounds: dict[str, list[float]] = {s: [] for s in scenario.stats}
    mismatches = 0

    for rep in range(scenario.reps):
        dataset, tau = _experiment_rep(scenario, rep)
        tau_max = float(tau.max())
        for name, stat in zip(scenario.stats, stats):
            pv, _ = p_value(
                dataset, ConstantEffect(tau_max), stat, design, Exact(),
                Tail.UPPER, collect_values=False,
            )
            proxy_covered = pv.p > scenario.alpha
            if proxy_covered:
                covered[name] += 1
            if rep < scenario.crosscheck or scenario.collect_bounds:
                res = invert_ci(
                    dataset, stat, design, Target.MAX_EFFECT,
                    alpha=scenario.alpha, mode=Exact(),
                )
                if scenario.collect_bounds:
                    bounds[name].append(res.bound)
                if rep < scenario.crosscheck and (res.bound <= tau_max) != proxy_covered:
                    mismatches += 1

    rates = {f"coverage_{s}": covered[s] / scenario.reps for s in scenario.stats}
    ses = {k: _rate_se(r, scenario.reps) for k, r in rates.items()}
    metadata = {
        "alpha": scenario.alpha,
        "effects": scenario.effects,
        "baseline": scenario.baseline,
        "design": [scenario.n_units, scenario.n_treated],
        "crosscheck_replications": min(scenario.crosscheck, scenario.reps),
        "crosscheck_mismatches": mismatches,
    }
    if scenario.collect_bounds:
        metadata["median_bound"] = {s: float(np.median(b)) for s, b in bounds.items()}
    return SimulationReport(
        kind=scenario.kind,
        reps=scenario.reps,
        seed=scenario.seed,
        rates=rates,
        standard_errors=ses,
        metadata=metadata,
    )


_RUNNERS = {
    "ttest_failure": run_ttest_failure,
    "conservativeness": run_conservativeness,
    "ci_coverage": run_ci_coverage,
}


def run_scenario(scenario: Scenario) -> SimulationReport:
    return _RUNNERS[scenario.kind](scenario)


def parse_scenario_text(text: str) -> Scenario:
    """Parse the key = value scenario format (# starts a comment)."""
    typed = {f.name: f.type for f in fields(Scenario)}
    raw: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value'", row=lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in typed:
            raise ParseError(f"line {lineno}: unknown scenario key {key!r}", row=lineno)
        raw[key] = _coerce(key, value)
    if "kind" not in raw:
        raise ParseError("scenario file must set 'kind'")
    return Scenario(**raw)


def _coerce(key: str, value: str):
    if key in ("stats",):
        return tuple(v.strip() for v in value.split(",") if v.strip())
    if key in ("alphas",):
        return tuple(float(v) for v in value.split(",") if v.strip())
    if key in ("include_permutation", "collect_bounds"):
        return value.lower() in ("1", "true", "yes", "on")
    if key in ("kind", "effects", "baseline"):
        return value
    if key in ("alpha", "beta_a", "beta_b", "null_tau0"):
        return float(value)
    return int(value)
