"""Command-line front end.

Subcommands: ``test`` (sharp/bounded hypothesis tests), ``ci`` (max/min
effect confidence bounds), ``simultaneous`` (intersection-union), and
``monotonicity``, plus ``oracle`` (differential-test battery) and ``sim``
(Monte-Carlo studies). Results are written as a JSON envelope; reference
distributions export as two-column CSV (value,count) for external
plotting.

Exit codes: 0 ok, 2 usage, 3 data error, 4 computation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    ConstantEffect,
    CompleteRandomization,
    Dataset,
    PerUnitEffect,
    design_from_dataset,
    validate_dataset,
)
from .errors import ParseError, RandboundError
from .impute import ImputationVariant
from .infer import (
    Direction,
    Target,
    directed_p_value,
    invert_ci,
    test_monotonicity,
    test_simultaneous,
)
from .oracle import battery
from .refdist import Exact, MonteCarlo, Tail, p_value
from .sim import parse_scenario_text, run_scenario
from .stats import describe_statistic, parse_statistic


def ingest_csv(path, id_col="id", w_col="w", y_col="y", block_col=None) -> Dataset:
    """Read and validate a dataset CSV with a header row.

    ``w`` must be literally 0 or 1 and ``y`` a decimal number. The block
    column is used when named explicitly or when a column called ``block``
    exists; blank block cells count as missing.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (w_col, y_col):
            if col not in header:
                raise ParseError(f"{path}: missing required column {col!r}", column=col)
        if block_col is not None and block_col not in header:
            raise ParseError(f"{path}: missing block column {block_col!r}", column=block_col)
        use_block = block_col or ("block" if "block" in header else None)

        rows = []
        for lineno, rec in enumerate(reader, start=2):
            raw_w = (rec.get(w_col) or "").strip()
            if raw_w not in ("0", "1"):
                raise ParseError(
                    f"{path}:{lineno}: treatment must be 0 or 1, got {raw_w!r}",
                    row=lineno, column=w_col,
                )
            raw_y = (rec.get(y_col) or "").strip()
            try:
                y = float(raw_y)
            except ValueError:
                raise ParseError(
                    f"{path}:{lineno}: outcome is not a number: {raw_y!r}",
                    row=lineno, column=y_col,
                )
            block = (rec.get(use_block) or "").strip() if use_block else ""
            rows.append(
                {
                    "id": (rec.get(id_col) or "").strip() or f"r{lineno - 1}",
                    "w": int(raw_w),
                    "y": y,
                    "block": block or None,
                }
            )
    return validate_dataset(rows)


def _read_effect(raw: str, parser) -> ConstantEffect | PerUnitEffect:
    if raw.startswith("@"):
        path = Path(raw[1:])
        try:
            values = [float(line) for line in path.read_text().split()]
        except FileNotFoundError:
            raise
        except ValueError:
            raise ParseError(f"{path}: per-unit null file must hold one number per line")
        return PerUnitEffect(np.array(values))
    try:
        return ConstantEffect(float(raw))
    except ValueError:
        parser.error(f"--null must be a number or @file, got {raw!r}")


def _resolve_design(dataset: Dataset, choice: str):
    if choice == "paired" or (choice == "auto" and dataset.has_blocks):
        return design_from_dataset(dataset)
    return CompleteRandomization(dataset.n, dataset.n_treated)


def _resolve_mode(args, parser):
    if args.mode == "exact":
        if args.draws is not None:
            parser.error("--draws is only valid with --mode mc")
        if args.mc_add_one:
            parser.error("--mc-add-one is only valid with --mode mc")
        return Exact()
    if args.draws is None:
        parser.error("--mode mc requires --draws")
    return MonteCarlo(seed=args.seed, draws=args.draws, add_one=args.mc_add_one)


def _pvalue_dict(pv) -> dict:
    return {
        "p": pv.p,
        "numerator": pv.numerator,
        "denominator": pv.denominator,
        "tail": pv.tail,
        "mode": pv.mode,
        "add_one": pv.add_one,
    }


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def _add_io_flags(sub):
    sub.add_argument("--input", required=True, help="dataset CSV with a header row")
    sub.add_argument("--id-col", default="id")
    sub.add_argument("--w-col", default="w")
    sub.add_argument("--y-col", default="y")
    sub.add_argument("--block-col", default=None)
    sub.add_argument(
        "--design", choices=("auto", "complete", "paired"), default="auto",
        help="auto = paired when a block column is present (complete ignores blocks)",
    )
    sub.add_argument("--out", default=None, help="write the JSON envelope here (default stdout)")


def _add_mode_flags(sub):
    sub.add_argument("--mode", choices=("exact", "mc"), default="exact")
    sub.add_argument("--draws", type=int, default=None, help="Monte Carlo draw count J")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument(
        "--mc-add-one", action="store_true",
        help="estimate p as (1+count)/(1+J) instead of the plain average",
    )
    sub.add_argument("--threads", type=int, default=1)


def _add_stat_flag(sub):
    sub.add_argument(
        "--stat", required=True,
        help="diff-means | rank-sum | stephenson:S | threshold:C | welch-t",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randbound",
        description="Exact randomization inference for bounded nulls and extreme-effect CIs.",
    )
    parser.add_argument("--version", action="version", version=f"randbound {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    t = subs.add_parser(
        "test",
        help="one-sided randomization test of a sharp or bounded null",
        epilog=(
            "example: randbound test --input \"$(python -m randbound.datasets table1)\" "
            "--stat diff-means --null 0 --direction non-superiority --mode exact"
        ),
    )
    _add_io_flags(t)
    _add_stat_flag(t)
    t.add_argument("--null", default="0", help="constant effect bound, or @file with one value per unit")
    t.add_argument("--direction", choices=[d.value for d in Direction], default=None)
    t.add_argument(
        "--tail", choices=(Tail.UPPER, Tail.LOWER), default=None,
        help="raw sharp-null tail test (any statistic; bypasses the bounded-null reading)",
    )
    t.add_argument("--impute", choices=[v.value for v in ImputationVariant], default="both")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--export-dist", default=None, help="write the reference distribution CSV here")
    _add_mode_flags(t)

    c = subs.add_parser(
        "ci",
        help="one-sided confidence bound for the maximum or minimum unit effect",
        epilog=(
            "example: randbound ci --input \"$(python -m randbound.datasets paired8)\" "
            "--stat stephenson:6 --target max --alpha 0.10 --outcome-range 0:100"
        ),
    )
    _add_io_flags(c)
    _add_stat_flag(c)
    c.add_argument("--target", choices=[t_.value for t_ in Target], default="max")
    c.add_argument("--alpha", type=float, default=0.10)
    c.add_argument("--outcome-range", default=None, help="declared outcome range LO:HI for the outer limit")
    c.add_argument("--grid-points", type=int, default=101)
    c.add_argument("--tol-scale", type=float, default=1e-4)
    _add_mode_flags(c)

    s = subs.add_parser(
        "simultaneous",
        help="intersection-union test of both zero-bounded nulls",
        epilog=(
            "example: randbound simultaneous --input \"$(python -m randbound.datasets paired8)\" "
            "--stat stephenson:6 --mode exact"
        ),
    )
    _add_io_flags(s)
    _add_stat_flag(s)
    _add_mode_flags(s)

    m = subs.add_parser(
        "monotonicity",
        help="instrument-monotonicity check: zero-bounded test on uptake outcomes",
        epilog=(
            "example: randbound monotonicity --input \"$(python -m randbound.datasets table1)\" "
            "--stat threshold:1.5 --direction non-inferiority"
        ),
    )
    _add_io_flags(m)
    _add_stat_flag(m)
    m.add_argument("--direction", choices=[d.value for d in Direction], default="non-inferiority")
    m.add_argument("--alpha", type=float, default=0.05)
    _add_mode_flags(m)

    o = subs.add_parser(
        "oracle",
        help="run the brute-force differential battery and report agreement",
        epilog="example: randbound oracle --trials 25 --seed 1",
    )
    o.add_argument("--trials", type=int, default=50)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out", default=None)

    si = subs.add_parser(
        "sim",
        help="run a Monte-Carlo study from a key = value scenario file",
        epilog="example: randbound sim --scenario scenario.txt --out report.json",
    )
    si.add_argument("--scenario", required=True)
    si.add_argument("--out", default=None)

    return parser


def _check_alpha(args, parser):
    if not 0 < args.alpha < 1:
        parser.error(f"--alpha must be in (0, 1), got {args.alpha}")


def _run_test(args, parser) -> dict:
    _check_alpha(args, parser)
    if args.direction and args.tail:
        parser.error("--direction and --tail are mutually exclusive")
    dataset = ingest_csv(args.input, args.id_col, args.w_col, args.y_col, args.block_col)
    design = _resolve_design(dataset, args.design)
    mode = _resolve_mode(args, parser)
    stat = parse_statistic(args.stat)
    effect = _read_effect(args.null, parser)
    variant = ImputationVariant(args.impute)
    collect = bool(args.export_dist) or None

    if args.tail:
        pv, dist = p_value(
            dataset, effect, stat, design, mode, args.tail,
            variant=variant, threads=args.threads, collect_values=collect,
        )
        frame = "observed"
    else:
        direction = Direction(args.direction or "non-superiority")
        from .infer import _require_ei

        _require_ei(stat)
        pv, dist = directed_p_value(
            dataset, effect, stat, design, direction, mode,
            variant=variant, threads=args.threads, collect_values=collect,
        )
        frame = "observed" if direction is Direction.NON_SUPERIORITY else "negated"

    if args.export_dist:
        dist.to_csv(args.export_dist)

    return {
        "stat": describe_statistic(stat),
        "direction": args.direction or (None if args.tail else "non-superiority"),
        "tail": args.tail,
        "alpha": args.alpha,
        "t_obs": dist.t_obs,
        "frame": frame,
        "pvalue": _pvalue_dict(pv),
        "reject": pv.p <= args.alpha,
    }


def _run_ci(args, parser) -> dict:
    _check_alpha(args, parser)
    dataset = ingest_csv(args.input, args.id_col, args.w_col, args.y_col, args.block_col)
    design = _resolve_design(dataset, args.design)
    mode = _resolve_mode(args, parser)
    stat = parse_statistic(args.stat)
    outcome_range = None
    if args.outcome_range:
        try:
            lo, hi = (float(v) for v in args.outcome_range.replace(",", ":").split(":"))
        except ValueError:
            parser.error(f"--outcome-range must be LO:HI, got {args.outcome_range!r}")
        outcome_range = (lo, hi)

    res = invert_ci(
        dataset, stat, design, Target(args.target), alpha=args.alpha, mode=mode,
        outcome_range=outcome_range, grid_points=args.grid_points,
        tol_scale=args.tol_scale, threads=args.threads,
    )
    lo, hi = res.interval
    return {
        "stat": res.stat,
        "target": res.target.value,
        "alpha": res.alpha,
        "bound": _finite_or_none(res.bound),
        "outer": _finite_or_none(res.outer),
        "interval": [_finite_or_none(lo), _finite_or_none(hi)],
        "p_at_bound": res.p_at_bound,
        "boundary_hit": res.boundary_hit,
        "trace": [{"phase": ph, "tau0": t0, "p": p} for ph, t0, p in res.trace],
    }


def _run_simultaneous(args, parser) -> dict:
    dataset = ingest_csv(args.input, args.id_col, args.w_col, args.y_col, args.block_col)
    design = _resolve_design(dataset, args.design)
    mode = _resolve_mode(args, parser)
    stat = parse_statistic(args.stat)
    res = test_simultaneous(dataset, stat, design, mode, threads=args.threads)
    return {
        "stat": res.stat,
        "p_up": _pvalue_dict(res.p_up),
        "p_down": _pvalue_dict(res.p_down),
        "p_iu": res.p_iu,
    }


def _run_monotonicity(args, parser) -> dict:
    _check_alpha(args, parser)
    dataset = ingest_csv(args.input, args.id_col, args.w_col, args.y_col, args.block_col)
    design = _resolve_design(dataset, args.design)
    mode = _resolve_mode(args, parser)
    stat = parse_statistic(args.stat)
    res = test_monotonicity(
        dataset, stat, design, Direction(args.direction),
        alpha=args.alpha, mode=mode, threads=args.threads,
    )
    return {
        "stat": res.test.stat,
        "direction": res.test.direction.value,
        "alpha": res.test.alpha,
        "pvalue": _pvalue_dict(res.test.pvalue),
        "violated": res.violated,
    }


def _config_echo(args) -> dict:
    skip = {"command", "func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        if args.command == "test":
            payload = _run_test(args, parser)
        elif args.command == "ci":
            payload = _run_ci(args, parser)
        elif args.command == "simultaneous":
            payload = _run_simultaneous(args, parser)
        elif args.command == "monotonicity":
            payload = _run_monotonicity(args, parser)
        elif args.command == "oracle":
            payload = battery(trials=args.trials, seed=args.seed)
        else:
            payload = run_scenario(parse_scenario_text(Path(args.scenario).read_text())).to_dict()
    except FileNotFoundError as exc:
        print(f"error FileNotFound: {exc}", file=sys.stderr)
        return 3
    except RandboundError as exc:
        print(f"error {exc.code}: {exc}", file=sys.stderr)
        return exc.exit_code

    envelope = {
        "version": __version__,
        "command": args.command,
        "config": _config_echo(args),
        "result": payload,
        "timing_s": round(time.perf_counter() - started, 6),
    }
    text = json.dumps(envelope, sort_keys=True, indent=2) + "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.command == "oracle" and not payload["all_ok"]:
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
