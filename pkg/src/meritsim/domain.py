"""Shared domain types: plants, demand, agents, bids and scenario settings.

Nothing here has behaviour beyond construction-time validation and a few
derived quantities (plant timelines, scaled demand curves).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import DurationSumMismatch, NonMonotoneDemand, UnknownPlantType

HOURS_PER_YEAR = 8760.0
DEFAULT_SEGMENTS = 20


class Fuel(str, enum.Enum):
    GAS = "gas"
    COAL = "coal"
    URANIUM = "uranium"
    NONE = "none"


class PlantType(str, enum.Enum):
    CCGT = "CCGT"
    COAL = "Coal"
    NUCLEAR = "Nuclear"
    OCGT = "OCGT"
    ONSHORE_WIND = "OnshoreWind"
    OFFSHORE_WIND = "OffshoreWind"
    PV = "PV"
    HYDRO = "Hydro"
    RECIP_ENGINE = "RecipEngine"

    @classmethod
    def parse(cls, name: str) -> "PlantType":
        key = name.strip().replace(" ", "").replace("_", "").lower()
        for member in cls:
            if member.value.lower() == key or member.name.replace("_", "").lower() == key:
                return member
        alias = _TYPE_ALIASES.get(key)
        if alias is None:
            raise UnknownPlantType(name)
        return alias

    @property
    def fuel(self) -> Fuel:
        return _FUEL_OF[self]

    @property
    def is_renewable(self) -> bool:
        return self in (PlantType.ONSHORE_WIND, PlantType.OFFSHORE_WIND, PlantType.PV, PlantType.HYDRO)


_TYPE_ALIASES = {
    "onshore": PlantType.ONSHORE_WIND,
    "offshore": PlantType.OFFSHORE_WIND,
    "solar": PlantType.PV,
    "photovoltaic": PlantType.PV,
    "recip": PlantType.RECIP_ENGINE,
    "recipengine(gas)": PlantType.RECIP_ENGINE,
    "recip.engine(gas)": PlantType.RECIP_ENGINE,
    "recipengine(diesel)": PlantType.RECIP_ENGINE,
    "recip.engine(diesel)": PlantType.RECIP_ENGINE,
}

_FUEL_OF = {
    PlantType.CCGT: Fuel.GAS,
    PlantType.OCGT: Fuel.GAS,
    PlantType.RECIP_ENGINE: Fuel.GAS,
    PlantType.COAL: Fuel.COAL,
    PlantType.NUCLEAR: Fuel.URANIUM,
    PlantType.ONSHORE_WIND: Fuel.NONE,
    PlantType.OFFSHORE_WIND: Fuel.NONE,
    PlantType.PV: Fuel.NONE,
    PlantType.HYDRO: Fuel.NONE,
}

# Numeric PlantSpec fields in cost-table column order.
COST_FIELDS = (
    "efficiency",
    "operating_period",
    "pre_dev_period",
    "construction_period",
    "pre_dev_cost",
    "construction_cost",
    "infrastructure_cost",
    "fixed_om_cost",
    "variable_om_cost",
    "insurance_cost",
    "connection_cost",
)


@dataclass(frozen=True)
class PlantSpec:
    """Techno-economic parameters of one plant.

    Costs are per MW unless noted: ``infrastructure_cost`` is an absolute
    one-off amount, ``fixed_om_cost``/``insurance_cost``/``connection_cost``
    are per MW per year and ``variable_om_cost`` is per MWh.
    """

    plant_type: PlantType
    capacity: float
    cost_basis_year: int
    efficiency: float
    operating_period: float
    pre_dev_period: float
    construction_period: float
    pre_dev_cost: float
    construction_cost: float
    infrastructure_cost: float
    fixed_om_cost: float
    variable_om_cost: float
    insurance_cost: float = 0.0
    connection_cost: float = 0.0

    def __post_init__(self):
        if not isinstance(self.plant_type, PlantType):
            object.__setattr__(self, "plant_type", PlantType.parse(str(self.plant_type)))
        if not self.capacity > 0:
            raise ValueError(f"capacity must be positive, got {self.capacity}")
        # Fuel-less technologies carry a nominal 0 or 1 efficiency in cost tables.
        if self.plant_type.fuel is Fuel.NONE:
            if not 0.0 <= self.efficiency <= 1.0:
                raise ValueError(f"efficiency out of [0, 1]: {self.efficiency}")
        elif not 0.0 < self.efficiency <= 1.0:
            raise ValueError(f"efficiency out of (0, 1]: {self.efficiency}")
        if not self.operating_period > 0:
            raise ValueError("operating period must be positive")
        if self.pre_dev_period < 0 or self.construction_period < 0:
            raise ValueError("periods must be non-negative")
        for name in ("pre_dev_cost", "construction_cost", "infrastructure_cost",
                     "fixed_om_cost", "variable_om_cost", "insurance_cost"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def lead_time(self) -> int:
        return int(round(self.pre_dev_period + self.construction_period))

    @property
    def lifetime(self) -> int:
        """Years from construction start to retirement."""
        return int(round(self.pre_dev_period + self.construction_period + self.operating_period))

    @property
    def annual_fixed_cost_per_mw(self) -> float:
        return self.fixed_om_cost + self.insurance_cost + self.connection_cost

    def total_capital_cost(self) -> float:
        return (self.pre_dev_cost + self.construction_cost) * self.capacity + self.infrastructure_cost

    def with_capacity(self, capacity: float) -> "PlantSpec":
        return replace(self, capacity=capacity)


class PlantStatus(enum.IntEnum):
    PRE_DEVELOPMENT = 0
    CONSTRUCTION = 1
    OPERATING = 2
    RETIRED = 3


@dataclass(frozen=True)
class PlantInstance:
    plant_id: str
    spec: PlantSpec
    owner: str
    construction_start_year: int
    sampled_variable_om: float
    capacity_fraction_per_segment: tuple[float, ...]
    availability: float = 1.0

    def __post_init__(self):
        fractions = tuple(float(f) for f in self.capacity_fraction_per_segment)
        if any(f < 0.0 or f > 1.0 for f in fractions):
            raise ValueError("capacity fractions must lie in [0, 1]")
        object.__setattr__(self, "capacity_fraction_per_segment", fractions)
        if not 0.0 < self.availability <= 1.0:
            raise ValueError("availability must lie in (0, 1]")

    @property
    def operating_start_year(self) -> int:
        return self.construction_start_year + self.spec.lead_time

    @property
    def retirement_year(self) -> int:
        return self.operating_start_year + int(round(self.spec.operating_period))

    def status(self, year: int) -> PlantStatus:
        return plant_timeline(self, year)


def plant_timeline(instance: PlantInstance, current_year: int) -> PlantStatus:
    """Lifecycle status of ``instance`` in ``current_year``."""
    spec = instance.spec
    start = instance.construction_start_year
    if current_year >= instance.retirement_year:
        return PlantStatus.RETIRED
    if current_year >= instance.operating_start_year:
        return PlantStatus.OPERATING
    if current_year >= start + int(round(spec.pre_dev_period)):
        return PlantStatus.CONSTRUCTION
    return PlantStatus.PRE_DEVELOPMENT


@dataclass(frozen=True)
class LoadDurationCurve:
    """Yearly demand as descending (demand MW, duration hours) segments."""

    demands: tuple[float, ...]
    durations: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "demands", tuple(float(d) for d in self.demands))
        object.__setattr__(self, "durations", tuple(float(h) for h in self.durations))

    @property
    def n_segments(self) -> int:
        return len(self.demands)

    @property
    def segments(self) -> list[tuple[float, float]]:
        return list(zip(self.demands, self.durations))

    @property
    def peak(self) -> float:
        return self.demands[0]

    def demand_array(self) -> np.ndarray:
        return np.asarray(self.demands)

    def duration_array(self) -> np.ndarray:
        return np.asarray(self.durations)

    def scaled(self, factor: float) -> "LoadDurationCurve":
        return LoadDurationCurve(tuple(d * factor for d in self.demands), self.durations)

    def energy(self) -> float:
        return float(np.dot(self.demands, self.durations))


def validate_ldc(segments: Sequence[tuple[float, float]], tol: float = 1e-6) -> LoadDurationCurve:
    """Build a load duration curve, rejecting misordered or mis-timed input."""
    segments = list(segments)
    if not segments:
        raise ValueError("a load duration curve needs at least one segment")
    demands = [float(d) for d, _ in segments]
    durations = [float(h) for _, h in segments]
    if any(d < 0 for d in demands) or any(h < 0 for h in durations):
        raise ValueError("demands and durations must be non-negative")
    for k in range(1, len(demands)):
        if demands[k] > demands[k - 1]:
            raise NonMonotoneDemand(
                f"segment {k} demand {demands[k]} exceeds segment {k - 1} demand {demands[k - 1]}"
            )
    total = math.fsum(durations)
    if abs(total - HOURS_PER_YEAR) > tol:
        raise DurationSumMismatch(f"durations sum to {total}, expected {HOURS_PER_YEAR}")
    return LoadDurationCurve(tuple(demands), tuple(durations))


@dataclass
class Loan:
    principal: float
    annual_rate: float
    remaining_years: int
    annual_payment: float
    start_year: int = 0

    def __post_init__(self):
        if self.principal < 0 or self.annual_payment < 0:
            raise ValueError("loan principal and payment must be non-negative")


@dataclass
class GenCo:
    id: str
    name: str
    cash_balance: float
    discount_rate: float
    forecast_window: int
    upfront_capital_fraction: float
    plants: list[PlantInstance] = field(default_factory=list)
    loans: list[Loan] = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 < self.discount_rate < 1.0:
            raise ValueError(f"discount rate must lie in (0, 1), got {self.discount_rate}")
        if self.forecast_window < 2:
            raise ValueError("forecast window must cover at least two years")
        if not 0.0 <= self.upfront_capital_fraction <= 1.0:
            raise ValueError("upfront capital fraction must lie in [0, 1]")

    def operating_plants(self, year: int) -> list[PlantInstance]:
        return [p for p in self.plants if p.status(year) is PlantStatus.OPERATING]


@dataclass(frozen=True)
class Bid:
    plant_id: str
    segment_index: int
    offered_capacity: float
    price: float
    owner: str = ""

    def __post_init__(self):
        if self.offered_capacity < 0:
            raise ValueError("offered capacity must be non-negative")
        if self.price < 0:
            raise ValueError("bid price must be non-negative")


@dataclass(frozen=True)
class SegmentClearing:
    segment_index: int
    demand: float
    duration_hours: float
    smp: float
    accepted: tuple[tuple[Bid, float], ...]
    unmet_demand: float

    @property
    def dispatched(self) -> float:
        return math.fsum(mw for _, mw in self.accepted)

    @property
    def scarce(self) -> bool:
        return self.unmet_demand > 0


@dataclass(frozen=True)
class ClearingResult:
    segments: tuple[SegmentClearing, ...]

    def smp(self) -> np.ndarray:
        return np.array([s.smp for s in self.segments])

    def dispatch_by_plant(self) -> dict[str, list[float]]:
        """Dispatched MW per plant, one entry per segment."""
        out: dict[str, list[float]] = {}
        n = len(self.segments)
        for k, seg in enumerate(self.segments):
            for bid, mw in seg.accepted:
                out.setdefault(bid.plant_id, [0.0] * n)[k] += mw
        return out

    def revenue_by_plant(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for seg in self.segments:
            for bid, mw in seg.accepted:
                out[bid.plant_id] = out.get(bid.plant_id, 0.0) + mw * seg.duration_hours * seg.smp
        return out


@dataclass(frozen=True)
class FleetSettings:
    registry: str | None = None
    companies: str | None = None
    target_capacity_mw: float | None = None
    scale_cash: bool = True


@dataclass(frozen=True)
class InvestmentSettings:
    enabled: bool = True
    max_per_year: int = 1
    block_sizes_mw: tuple[float, ...] = ()
    lookahead_years: int = 15
    candidate_types: tuple[PlantType, ...] = tuple(PlantType)
    freeze_when_cash_negative: bool = False
    # Drops larger table capacities from the menu; useful when the fleet is a scaled-down sample.
    max_candidate_mw: float | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    start_year: int
    n_years: int
    demand_growth: float
    initial_ldc: LoadDurationCurve
    fuel_price_trajectory: Mapping[Fuel, tuple[float, ...]]
    carbon_tax_schedule: tuple[float, ...]
    emission_factors: Mapping[Fuel, float]
    lost_load_price: float
    wacc_mean: float = 0.08
    wacc_std: float = 0.03
    vom_uniform_lo: float = 0.3
    vom_uniform_hi: float = 2.0
    upfront_capital_fraction: float = 0.25
    n_replications: int = 1
    rng_seed: int = 0
    stochastic_enabled: bool = True
    name: str = "scenario"
    dividend_fraction: float = 0.0
    forecast_window_range: tuple[int, int] = (3, 10)
    arima_order: tuple[int, int, int] = (1, 1, 1)
    history_years: int = 10
    fleet: FleetSettings = FleetSettings()
    investment: InvestmentSettings = InvestmentSettings()
    summary_year_ranges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.n_years < 1:
            raise ValueError("n_years must be at least 1")
        if self.n_replications < 1:
            raise ValueError("n_replications must be at least 1")
        if not self.vom_uniform_lo < self.vom_uniform_hi:
            raise ValueError("vom_uniform_lo must be below vom_uniform_hi")
        if self.lost_load_price < 0:
            raise ValueError("lost load price must be non-negative")
        if self.forecast_window_range[0] < 2 or self.forecast_window_range[1] < self.forecast_window_range[0]:
            raise ValueError("invalid forecast window range")
        if self.history_years < self.forecast_window_range[1]:
            raise ValueError("seeded history is shorter than the longest forecast window")

    @property
    def end_year(self) -> int:
        return self.start_year + self.n_years - 1

    def _year_index(self, values: Sequence[float], year: int) -> float:
        i = min(max(year - self.start_year, 0), len(values) - 1)
        return values[i]

    def fuel_price(self, fuel: Fuel, year: int) -> float:
        if fuel is Fuel.NONE:
            return 0.0
        return float(self._year_index(self.fuel_price_trajectory[fuel], year))

    def carbon_tax(self, year: int) -> float:
        return float(self._year_index(self.carbon_tax_schedule, year))

    def emission_factor(self, fuel: Fuel) -> float:
        if fuel is Fuel.NONE:
            return 0.0
        return float(self.emission_factors.get(fuel, 0.0))
