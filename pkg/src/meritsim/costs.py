"""Plant cost data: table lookup with interpolation, LCOE calibration and
technology availability / capacity-factor tables."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from scipy.optimize import linprog

from .domain import COST_FIELDS, HOURS_PER_YEAR, PlantSpec, PlantType
from .errors import DuplicateCostRow, Infeasible, MissingAvailabilityData, UnknownPlantType

COST_COLUMNS = (
    "type", "capacity_mw", "year", "efficiency", "op_years", "predev_years", "constr_years",
    "predev_cost", "constr_cost", "infra_cost", "fixed_om", "var_om", "insurance", "connection",
)
_COLUMN_TO_FIELD = dict(zip(COST_COLUMNS[3:], COST_FIELDS))

# Cost parameters that LCOE calibration may solve for.
CALIBRATABLE = (
    "pre_dev_cost", "construction_cost", "infrastructure_cost", "fixed_om_cost",
    "variable_om_cost", "insurance_cost", "connection_cost",
)


def data_path(name: str) -> Path:
    return Path(str(resources.files("meritsim") / "data" / name))


def read_cost_rows(path: str | Path) -> list[PlantSpec]:
    """Parse a cost-table CSV into one PlantSpec per row, in file order."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != COST_COLUMNS:
            raise ValueError(f"{path}: expected columns {COST_COLUMNS}, got {reader.fieldnames}")
        for rec in reader:
            kwargs = {f: float(rec[c]) for c, f in _COLUMN_TO_FIELD.items()}
            rows.append(PlantSpec(
                plant_type=PlantType.parse(rec["type"]),
                capacity=float(rec["capacity_mw"]),
                cost_basis_year=int(rec["year"]),
                **kwargs,
            ))
    return rows


def write_cost_rows(rows: Iterable[PlantSpec], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COST_COLUMNS)
        for s in rows:
            w.writerow([s.plant_type.value, repr(s.capacity), s.cost_basis_year]
                       + [repr(getattr(s, f)) for f in COST_FIELDS])


def _mean_spec(specs: list[PlantSpec]) -> PlantSpec:
    first = specs[0]
    return replace(first, **{f: math.fsum(getattr(s, f) for s in specs) / len(specs) for f in COST_FIELDS})


class CostTable:
    """Cost rows keyed by (plant type, capacity, cost year).

    ``duplicates`` controls rows sharing a key: ``"error"`` rejects them and
    ``"mean"`` collapses them to their field-wise mean.
    """

    def __init__(self, rows: Iterable[PlantSpec], duplicates: str = "error"):
        grouped: dict[tuple[PlantType, float, int], list[PlantSpec]] = {}
        for spec in rows:
            grouped.setdefault((spec.plant_type, spec.capacity, spec.cost_basis_year), []).append(spec)
        self._rows: dict[tuple[PlantType, float, int], PlantSpec] = {}
        for key, specs in grouped.items():
            if len(specs) > 1:
                if duplicates == "error":
                    raise DuplicateCostRow(f"duplicate cost row for {key}")
                if duplicates != "mean":
                    raise ValueError(f"unknown duplicates policy {duplicates!r}")
                self._rows[key] = _mean_spec(specs)
            else:
                self._rows[key] = specs[0]
        self._index: dict[PlantType, dict[int, list[tuple[float, PlantSpec]]]] = {}
        for (ptype, cap, year), spec in sorted(self._rows.items(), key=lambda kv: (kv[0][0].value, kv[0][2], kv[0][1])):
            self._index.setdefault(ptype, {}).setdefault(year, []).append((cap, spec))

    @classmethod
    def from_csv(cls, *paths: str | Path, duplicates: str = "error") -> "CostTable":
        rows: list[PlantSpec] = []
        for p in paths:
            rows.extend(read_cost_rows(p))
        return cls(rows, duplicates=duplicates)

    def __len__(self) -> int:
        return len(self._rows)

    def __contains__(self, ptype: PlantType) -> bool:
        return ptype in self._index

    @property
    def rows(self) -> list[PlantSpec]:
        return list(self._rows.values())

    def plant_types(self) -> list[PlantType]:
        return list(self._index)

    def years(self, ptype: PlantType) -> list[int]:
        if ptype not in self._index:
            raise UnknownPlantType(ptype)
        return sorted(self._index[ptype])

    def nearest_year(self, ptype: PlantType, year: int) -> int:
        # Ties go to the more recent cost year.
        return min(self.years(ptype), key=lambda y: (abs(y - year), -y))

    def capacities(self, ptype: PlantType, year: int) -> list[float]:
        return [cap for cap, _ in self._index[ptype][self.nearest_year(ptype, year)]]


def load_default_cost_table() -> CostTable:
    """Both shipped tables; same-key rows in the historic data are averaged."""
    return CostTable.from_csv(data_path("historic_costs.csv"), data_path("modern_costs.csv"), duplicates="mean")


def lookup_or_interpolate(table: CostTable, plant_type: PlantType, capacity: float, year: int) -> PlantSpec:
    """Cost parameters for a plant of arbitrary size and cost year.

    The nearest cost year is chosen first. Within it, capacities between two
    known rows are linearly interpolated field by field; capacities outside
    the known range take the closest row unchanged. The returned spec
    carries the requested capacity.
    """
    if plant_type not in table:
        raise UnknownPlantType(plant_type)
    ref_year = table.nearest_year(plant_type, year)
    known = table._index[plant_type][ref_year]
    caps = [c for c, _ in known]
    if capacity <= caps[0]:
        spec = known[0][1]
    elif capacity >= caps[-1]:
        spec = known[-1][1]
    else:
        hi = next(i for i, c in enumerate(caps) if c >= capacity)
        c_hi, s_hi = known[hi]
        if c_hi == capacity:
            return s_hi
        c_lo, s_lo = known[hi - 1]
        w = (capacity - c_lo) / (c_hi - c_lo)
        fields = {f: getattr(s_lo, f) + w * (getattr(s_hi, f) - getattr(s_lo, f)) for f in COST_FIELDS}
        return replace(s_lo, capacity=capacity, **fields)
    if spec.capacity == capacity:
        return spec
    return replace(spec, capacity=capacity)


# --- lifetime cash-flow structure -------------------------------------------------------


def _period(x: float) -> int:
    return int(round(x))


def capital_schedule(spec: PlantSpec) -> np.ndarray:
    """Capital outlay per year ``t = 0..lifetime`` measured from construction start.

    Pre-development and construction costs are spread evenly over their
    periods (a zero-length period pays in a single year); the absolute
    infrastructure cost falls at the start of construction.
    """
    pd_, cd = _period(spec.pre_dev_period), _period(spec.construction_period)
    out = np.zeros(spec.lifetime + 1)
    out[0:max(pd_, 1)] += spec.pre_dev_cost * spec.capacity / max(pd_, 1)
    out[pd_:pd_ + max(cd, 1)] += spec.construction_cost * spec.capacity / max(cd, 1)
    out[pd_] += spec.infrastructure_cost
    return out


def operating_mask(spec: PlantSpec) -> np.ndarray:
    out = np.zeros(spec.lifetime + 1, dtype=bool)
    out[spec.lead_time:spec.lead_time + _period(spec.operating_period)] = True
    return out


def discount_factors(n: int, rate: float) -> np.ndarray:
    return (1.0 + rate) ** -np.arange(n, dtype=float)


def lcoe(spec: PlantSpec, capacity_factor: float, discount_rate: float, fuel_cost_per_mwh: float = 0.0) -> float:
    """Discounted lifetime cost divided by discounted lifetime energy."""
    coeffs, const, energy = _lcoe_linear_form(spec, capacity_factor, discount_rate, fuel_cost_per_mwh)
    cost = const + sum(coeffs[f] * getattr(spec, f) for f in CALIBRATABLE)
    return cost / energy


def _lcoe_linear_form(spec: PlantSpec, capacity_factor: float, discount_rate: float, fuel_cost_per_mwh: float):
    """Discounted cost as ``const + sum(coeff[f] * spec.f)`` plus discounted energy."""
    if capacity_factor <= 0:
        raise ValueError("capacity factor must be positive")
    n = spec.lifetime + 1
    d = discount_factors(n, discount_rate)
    pd_, cd = _period(spec.pre_dev_period), _period(spec.construction_period)
    op = operating_mask(spec)
    annual_mwh = spec.capacity * capacity_factor * HOURS_PER_YEAR
    d_op = float(d[op].sum())
    coeffs = {
        "pre_dev_cost": spec.capacity * float(d[0:max(pd_, 1)].sum()) / max(pd_, 1),
        "construction_cost": spec.capacity * float(d[pd_:pd_ + max(cd, 1)].sum()) / max(cd, 1),
        "infrastructure_cost": float(d[pd_]),
        "fixed_om_cost": spec.capacity * d_op,
        "variable_om_cost": annual_mwh * d_op,
        "insurance_cost": spec.capacity * d_op,
        "connection_cost": spec.capacity * d_op,
    }
    const = fuel_cost_per_mwh * annual_mwh * d_op
    return coeffs, const, annual_mwh * d_op


@dataclass(frozen=True)
class ParamBound:
    """Bounds for one parameter; with ``share`` they are fractions of the
    target LCOE attributable to that parameter rather than absolute values."""

    lower: float
    upper: float
    share: bool = False

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")


@dataclass(frozen=True)
class LcoeConstraintSet:
    base: PlantSpec
    target_lcoe: float
    assumed_capacity_factor: float
    assumed_discount_rate: float
    bounds: Mapping[str, ParamBound] = field(default_factory=dict)
    fuel_cost_per_mwh: float = 0.0

    def __post_init__(self):
        unknown = set(self.bounds) - set(CALIBRATABLE)
        if unknown:
            raise ValueError(f"cannot calibrate {sorted(unknown)}")


def estimate_params_from_lcoe(constraints: LcoeConstraintSet) -> PlantSpec:
    """Solve for the bounded cost parameters that reproduce ``target_lcoe``.

    With periods, capacity factor and discount rate fixed, discounted cost is
    linear in the cost parameters, so the calibration is a linear program.
    Among feasible solutions the one closest to the lower bounds (in
    normalised units) is returned. Parameters without bounds keep the base
    spec's values.
    """
    c = constraints
    coeffs, const, energy = _lcoe_linear_form(c.base, c.assumed_capacity_factor,
                                              c.assumed_discount_rate, c.fuel_cost_per_mwh)
    target_cost = c.target_lcoe * energy
    free = [f for f in CALIBRATABLE if f in c.bounds]
    fixed_cost = const + sum(coeffs[f] * getattr(c.base, f) for f in CALIBRATABLE if f not in c.bounds)

    lo, hi = [], []
    for f in free:
        b = c.bounds[f]
        if b.share:
            lo.append(b.lower * target_cost / coeffs[f])
            hi.append(b.upper * target_cost / coeffs[f])
        else:
            lo.append(b.lower)
            hi.append(b.upper)
    lo_a, hi_a = np.array(lo, dtype=float), np.array(hi, dtype=float)
    a = np.array([coeffs[f] for f in free], dtype=float)
    span = hi_a - lo_a

    scale = abs(target_cost) if target_cost else 1.0
    rhs = (target_cost - fixed_cost - float(a @ lo_a)) / scale
    row = a * span / scale
    if not free or not np.any(span > 0):
        if abs(rhs) > 1e-9:
            raise Infeasible("bounds leave no freedom to reach the target LCOE")
        z = np.zeros(len(free))
    else:
        res = linprog(c=np.ones(len(free)), A_eq=row[None, :], b_eq=[rhs],
                      bounds=[(0.0, 1.0)] * len(free), method="highs")
        if res.status != 0:
            raise Infeasible(f"no parameters within bounds reach LCOE {c.target_lcoe}: {res.message}")
        z = np.clip(res.x, 0.0, 1.0)
    values = lo_a + span * z
    # Absorb the solver's residual into the widest free parameter so the target holds tightly.
    if free and np.any(span > 0):
        j = int(np.argmax(a * span))
        resid = target_cost - fixed_cost - float(a @ values)
        values[j] = min(max(values[j] + resid / a[j], lo_a[j]), hi_a[j])
    return replace(c.base, **{f: float(v) for f, v in zip(free, values)})


# --- availability and capacity factors ---------------------------------------------------


class AvailabilityTable:
    """Piecewise-constant availability by technology and construction-year bucket."""

    def __init__(self, entries: Mapping[PlantType, list[tuple[int, float]]]):
        self._buckets: dict[PlantType, list[tuple[int, float]]] = {}
        for ptype, buckets in entries.items():
            buckets = sorted(buckets)
            values = [v for _, v in buckets]
            if any(not 0.0 < v <= 1.0 for v in values):
                raise ValueError(f"{ptype}: availability must lie in (0, 1]")
            if any(b < a for a, b in zip(values, values[1:])):
                raise ValueError(f"{ptype}: availability falls for newer construction years")
            self._buckets[ptype] = buckets

    @classmethod
    def from_csv(cls, path: str | Path) -> "AvailabilityTable":
        entries: dict[PlantType, list[tuple[int, float]]] = {}
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                entries.setdefault(PlantType.parse(rec["type"]), []).append(
                    (int(rec["from_year"]), float(rec["availability"])))
        return cls(entries)

    def availability(self, plant_type: PlantType, construction_year: int) -> float:
        buckets = self._buckets.get(plant_type)
        if not buckets:
            raise MissingAvailabilityData(plant_type)
        value = buckets[0][1]
        for start, v in buckets:
            if construction_year >= start:
                value = v
        return value


def availability(table: AvailabilityTable, plant_type: PlantType, construction_year: int) -> float:
    return table.availability(plant_type, construction_year)


class CapacityFactorTable:
    """Share of nameplate capacity offered per demand segment.

    Technologies absent from the table offer their full capacity. Profiles
    are resampled by segment position when the demand curve has a different
    number of segments.
    """

    def __init__(self, profiles: Mapping[PlantType, Iterable[float]]):
        self._profiles = {t: np.asarray(list(v), dtype=float) for t, v in profiles.items()}
        for t, v in self._profiles.items():
            if np.any((v < 0) | (v > 1)):
                raise ValueError(f"{t}: capacity fractions must lie in [0, 1]")

    @classmethod
    def from_csv(cls, path: str | Path) -> "CapacityFactorTable":
        raw: dict[PlantType, dict[int, float]] = {}
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                raw.setdefault(PlantType.parse(rec["type"]), {})[int(rec["segment"])] = float(rec["fraction"])
        return cls({t: [v[k] for k in sorted(v)] for t, v in raw.items()})

    def fractions(self, plant_type: PlantType, n_segments: int) -> tuple[float, ...]:
        prof = self._profiles.get(plant_type)
        if prof is None:
            return (1.0,) * n_segments
        if len(prof) == n_segments:
            return tuple(float(x) for x in prof)
        src = (np.arange(len(prof)) + 0.5) / len(prof)
        dst = (np.arange(n_segments) + 0.5) / n_segments
        return tuple(float(x) for x in np.interp(dst, src, prof))


def load_default_availability() -> AvailabilityTable:
    return AvailabilityTable.from_csv(data_path("availability.csv"))


def load_default_capacity_factors() -> CapacityFactorTable:
    return CapacityFactorTable.from_csv(data_path("capacity_factors.csv"))
