"""Stochastic mean curve vs deterministic curve against noisy reference worlds.

    python scripts/stochastic_validation.py [--trials 20] [--replications 40]
"""
import argparse
import json
from pathlib import Path

from meritsim.experiments import validation_trial
from meritsim.scenario import _shared_inputs, parse_config

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=ROOT / "configs" / "validation_2018.yaml")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--replications", type=int, default=40)
    args = ap.parse_args()
    config = parse_config(args.config)
    shared = _shared_inputs(config)
    wins = 0
    for t in range(args.trials):
        r = validation_trial(config, t, args.replications, shared)
        wins += r.stochastic_wins
        print(json.dumps({"trial": t, "stochastic_mae": round(r.stochastic_mae, 3),
                          "deterministic_mae": round(r.deterministic_mae, 3)}))
    print(json.dumps({"stochastic_wins": wins, "trials": args.trials}))


if __name__ == "__main__":
    main()
