"""Regenerate the illustrative input fixtures shipped in src/meritsim/data.

Only the two cost tables are transcribed data; everything written here is
synthetic (seeded) and shaped loosely on a 2018 GB-like system.
"""
import csv
from pathlib import Path

import numpy as np

DATA = Path(__file__).resolve().parents[1] / "src" / "meritsim" / "data"
N_SEG = 20


def write(name, header, rows):
    with open(DATA / name, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def ldc_shape():
    x = (np.arange(N_SEG) + 0.5) / N_SEG
    level = 0.40 + 0.60 * (1.0 - x) ** 1.3
    level = level / level[0]
    write("ldc_shape.csv", ["segment", "demand_fraction", "duration_hours"],
          [[k, round(float(v), 4), 438.0] for k, v in enumerate(level)])


def capacity_factors():
    x = np.arange(N_SEG) / (N_SEG - 1)
    profiles = {
        "OnshoreWind": 0.40 - 0.16 * x,
        "OffshoreWind": 0.50 - 0.14 * x,
        "PV": 0.02 + 0.16 * x,
        "Hydro": np.full(N_SEG, 0.35),
    }
    rows = [[t, k, round(float(v), 4)] for t, prof in profiles.items() for k, v in enumerate(prof)]
    write("capacity_factors.csv", ["type", "segment", "fraction"], rows)


def availability():
    rows = [
        ("CCGT", 1970, 0.86), ("CCGT", 1995, 0.90), ("CCGT", 2010, 0.92),
        ("Coal", 1960, 0.82), ("Coal", 1990, 0.86),
        ("Nuclear", 1960, 0.75), ("Nuclear", 1990, 0.82),
        ("OCGT", 1970, 0.90), ("OCGT", 2000, 0.93),
        ("RecipEngine", 1980, 0.93),
        ("Hydro", 1950, 0.90),
        ("OnshoreWind", 1990, 0.97),
        ("OffshoreWind", 2000, 0.95),
        ("PV", 1990, 0.98),
    ]
    write("availability.csv", ["type", "from_year", "availability"], rows)


COMPANIES = ["Albion Power", "Brightwater Energy", "Cairn Generation",
             "Dunmore Electric", "Eastgate Renewables", "Fenwick Utilities"]


def registry(rng):
    # type: (total MW, unit size range, operating-start year range)
    mix = {
        "CCGT": (30000, (350, 900), (1994, 2016)),
        "Coal": (10000, (400, 600), (1994, 2012)),
        "Nuclear": (9000, (450, 650), (1976, 1995)),
        "OCGT": (1600, (40, 150), (1995, 2016)),
        "RecipEngine": (1000, (10, 30), (2005, 2017)),
        "Hydro": (1800, (10, 100), (1990, 2010)),
        "OnshoreWind": (12000, (10, 100), (2000, 2017)),
        "OffshoreWind": (7500, (100, 600), (2005, 2017)),
        "PV": (9000, (1, 50), (2010, 2017)),
    }
    rows = []
    for ptype, (total, (lo, hi), (y0, y1)) in mix.items():
        built = 0.0
        while built < total:
            size = float(round(min(rng.uniform(lo, hi), max(total - built, lo)), 1))
            year = int(rng.integers(y0, y1 + 1))
            owner = COMPANIES[int(rng.integers(len(COMPANIES)))]
            rows.append([owner, ptype, size, year])
            built += size
    write("reference_registry.csv", ["company", "type", "capacity_mw", "construction_year"], rows)
    owned = {c: 0.0 for c in COMPANIES}
    for owner, _, size, _ in rows:
        owned[owner] += size
    write("reference_companies.csv", ["company", "cash", "forecast_window"],
          [[c, round(150_000.0 * owned[c], 0), ""] for c in COMPANIES])


def fuel_history(rng):
    months = [(y, m) for y in range(2008, 2018) for m in range(1, 13)]
    rows = []
    for fuel, base, sd, phi in (("gas", 20.0, 1.2, 0.85), ("coal", 9.0, 0.5, 0.85)):
        x = base
        for y, m in months:
            x = base + phi * (x - base) + rng.normal(0.0, sd)
            rows.append([fuel, f"{y}-{m:02d}", round(max(x, 0.5), 3)])
    write("fuel_price_history.csv", ["fuel", "month", "price"], rows)


def main():
    rng = np.random.default_rng(20180101)
    ldc_shape()
    capacity_factors()
    availability()
    registry(rng)
    fuel_history(rng)


if __name__ == "__main__":
    main()
