"""Run the flat carbon-tax scenarios and print the low-carbon share per year range.

    python scripts/carbon_sweep.py [--replications N] [--out-dir DIR]
"""
import argparse
import json
import time
from pathlib import Path

from scipy.stats import spearmanr

from meritsim.scenario import parse_config, run_batch, with_overrides, write_batch

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
TAXES = (0, 20, 40, 70)


def sweep(replications=None, out_dir=None, workers=1):
    rows = []
    for tax in TAXES:
        config = with_overrides(parse_config(CONFIGS / f"carbon_{tax}.yaml"), replications=replications)
        t0 = time.perf_counter()
        batch = run_batch(config, workers=workers)
        if out_dir is not None:
            write_batch(batch, out_dir)
        last = batch.summary().ranges[-1]
        rows.append({
            "tax": tax,
            "range": f"{last.start_year}-{last.end_year}",
            "low_carbon_mean": round(last.low_carbon.mean, 2),
            "low_carbon_std": round(last.low_carbon.std, 2),
            "seconds": round(time.perf_counter() - t0, 1),
        })
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replications", type=int)
    ap.add_argument("--out-dir")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    rows = sweep(args.replications, args.out_dir, args.workers)
    for r in rows:
        print(json.dumps(r))
    rho = spearmanr([r["tax"] for r in rows], [r["low_carbon_mean"] for r in rows]).statistic
    print(json.dumps({"spearman_rho": rho}))


if __name__ == "__main__":
    main()
