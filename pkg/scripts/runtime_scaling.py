"""Time one deterministic replication on fleets of growing size.

    python scripts/runtime_scaling.py [--config configs/carbon_40.yaml] [--gw 2 4 8 16 32]
"""
import argparse
import json
from pathlib import Path

from meritsim.experiments import runtime_scaling
from meritsim.scenario import parse_config

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=ROOT / "configs" / "carbon_40.yaml")
    ap.add_argument("--gw", type=float, nargs="+", default=[2, 4, 8])
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    print(json.dumps(runtime_scaling(parse_config(args.config), tuple(args.gw), args.repeats), indent=2))


if __name__ == "__main__":
    main()
