"""Batch command line: ``meritsim run | validate | summarize``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .domain import validate_ldc
from .errors import MeritSimError
from .metrics import PriceDurationCurve, mae_rmse, mean_curve, scenario_summary
from .scenario import parse_config, read_results, run_batch, with_overrides, write_batch, write_summary, _parse_range


def read_reference_curve(path: str | Path) -> PriceDurationCurve:
    """Reference prices from a ``duration_fraction,price`` CSV, sorted high to low."""
    with open(path, newline="") as fh:
        rows = [(float(r["duration_fraction"]), float(r["price"])) for r in csv.DictReader(fh)]
    if not rows:
        raise MeritSimError(f"{path}: empty reference curve")
    rows.sort()
    fractions = np.array([f for f, _ in rows])
    prices = np.array([p for _, p in rows])
    return PriceDurationCurve(prices, fractions)


def _run(args) -> int:
    config = with_overrides(parse_config(args.config), args.seed, args.replications, args.deterministic)
    batch = run_batch(config, workers=args.workers)
    out = write_batch(batch, args.out_dir)
    print(json.dumps({"status": "ok", "scenario": config.name, "replications": len(batch.replications),
                      "out_dir": str(out)}))
    return 0


def _validate(args) -> int:
    reps = read_results(args.results)
    year = reps[0].years[0] if args.year is None else args.year
    curves = np.stack([r.smp[r.years.index(year)] for r in reps])
    first = reps[0]
    ldc = validate_ldc(list(zip(first.demand[first.years.index(year)], first.durations)))
    model = mean_curve(curves, ldc, screen_outliers=not args.keep_outliers)
    mae, rmse = mae_rmse(model, read_reference_curve(args.reference))
    print(json.dumps({"status": "ok", "year": year, "replications": len(reps), "mae": mae, "rmse": rmse}))
    return 0


def _summarize(args) -> int:
    reps = read_results(args.results)
    ranges = [_parse_range(r) for r in args.ranges]
    summary = scenario_summary((r.capacity_mix for r in reps), ranges)
    out = Path(args.output) if args.output else Path(args.results) / "summary.csv"
    write_summary(summary, out)
    print(json.dumps({"status": "ok", "summary": str(out), "ranges": len(ranges)}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="meritsim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario and write result CSVs")
    run.add_argument("config")
    run.add_argument("--seed", type=int)
    run.add_argument("--replications", type=int)
    run.add_argument("--deterministic", action="store_true", help="disable all stochastic sampling")
    run.add_argument("--out-dir", default="results")
    run.add_argument("--workers", type=int, default=1)
    run.set_defaults(func=_run)

    val = sub.add_parser("validate", help="MAE/RMSE of the mean price duration curve against a reference")
    val.add_argument("results", help="scenario result directory")
    val.add_argument("reference", help="CSV with duration_fraction,price")
    val.add_argument("--year", type=int)
    val.add_argument("--keep-outliers", action="store_true")
    val.set_defaults(func=_validate)

    summ = sub.add_parser("summarize", help="low-carbon share statistics over year ranges")
    summ.add_argument("results", help="scenario result directory")
    summ.add_argument("ranges", nargs="+", help="inclusive year ranges such as 2039-2050")
    summ.add_argument("-o", "--output")
    summ.set_defaults(func=_summarize)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (MeritSimError, OSError, ValueError, KeyError) as exc:
        print(json.dumps({"status": "error", "error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
