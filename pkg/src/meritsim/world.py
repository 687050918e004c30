"""Yearly simulation loop tying demand, GenCos and the power exchange together."""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .costs import (
    AvailabilityTable,
    CapacityFactorTable,
    CostTable,
    capital_schedule,
    data_path,
    load_default_availability,
    load_default_capacity_factors,
    load_default_cost_table,
    lookup_or_interpolate,
)
from .domain import (
    ClearingResult,
    Fuel,
    GenCo,
    LoadDurationCurve,
    PlantInstance,
    PlantStatus,
    PlantType,
    ScenarioConfig,
)
from .errors import RegistryParseError, UnknownPlantType
from .forecasting import FuelVolatilityModel, History, fit_fuel_volatility
from .investment import CandidateBatch, FleetArrays, candidate_menu, invest
from .market import MarketPrices, clear_year, make_bids
from .stochastics import RngStream, sample_fuel_price, sample_variable_om, sample_wacc

TRADED_FUELS = (Fuel.GAS, Fuel.COAL, Fuel.URANIUM)
# Fleet subsampling draws from its own stream so every replication of a scenario shares one fleet.
FLEET_STREAM = 2**31 - 1


@dataclass(frozen=True)
class RegistryRow:
    company: str
    plant_type: PlantType
    capacity_mw: float
    construction_year: int


@dataclass(frozen=True)
class CompanyRow:
    company: str
    cash: float
    forecast_window: int | None = None


@dataclass(frozen=True)
class Registries:
    plants: tuple[RegistryRow, ...]
    companies: tuple[CompanyRow, ...]

    @property
    def total_capacity(self) -> float:
        return math.fsum(r.capacity_mw for r in self.plants)


def read_plant_registry(path: str | Path) -> list[RegistryRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"company", "type", "capacity_mw", "construction_year"}
        if not need <= set(reader.fieldnames or ()):
            raise RegistryParseError(f"{path}: plant registry needs columns {sorted(need)}")
        for line, rec in enumerate(reader, start=2):
            try:
                rows.append(RegistryRow(rec["company"].strip(), PlantType.parse(rec["type"]),
                                        float(rec["capacity_mw"]), int(rec["construction_year"])))
            except UnknownPlantType:
                raise
            except (TypeError, ValueError) as exc:
                raise RegistryParseError(f"{path}:{line}: {exc}") from exc
    return rows


def read_company_registry(path: str | Path) -> list[CompanyRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if not {"company", "cash"} <= set(reader.fieldnames or ()):
            raise RegistryParseError(f"{path}: company registry needs columns company, cash")
        for line, rec in enumerate(reader, start=2):
            try:
                window = rec.get("forecast_window") or ""
                rows.append(CompanyRow(rec["company"].strip(), float(rec["cash"]),
                                       int(window) if window.strip() else None))
            except (TypeError, ValueError) as exc:
                raise RegistryParseError(f"{path}:{line}: {exc}") from exc
    return rows


def load_registries(plants: str | Path | None = None, companies: str | Path | None = None) -> Registries:
    plants = data_path("reference_registry.csv") if plants is None else plants
    companies = data_path("reference_companies.csv") if companies is None else companies
    return Registries(tuple(read_plant_registry(plants)), tuple(read_company_registry(companies)))


def stratified_sample(rows: list[RegistryRow], fraction: float, rng: RngStream) -> list[RegistryRow]:
    """Subsample plants so each technology keeps ``fraction`` of its capacity.

    Within a technology plants are visited in random order and kept whenever
    doing so brings the running total closer to the target. Single swaps
    between kept and dropped plants then tighten the total further.
    """
    by_type: dict[PlantType, list[RegistryRow]] = defaultdict(list)
    for r in rows:
        by_type[r.plant_type].append(r)
    keep = []
    for ptype in sorted(by_type, key=lambda t: t.value):
        group = by_type[ptype]
        target = fraction * math.fsum(r.capacity_mw for r in group)
        order = rng.permutation(len(group))
        caps = np.array([group[int(i)].capacity_mw for i in order])
        chosen = np.zeros(len(caps), dtype=bool)
        total = 0.0
        for j, cap in enumerate(caps):
            if abs(total + cap - target) < abs(total - target):
                chosen[j] = True
                total += cap
        while chosen.any() and not chosen.all():
            ins, outs = np.nonzero(chosen)[0], np.nonzero(~chosen)[0]
            gap = np.abs(total - caps[ins][:, None] + caps[outs][None, :] - target)
            a, b = np.unravel_index(np.argmin(gap), gap.shape)
            if not gap[a, b] < abs(total - target) - 1e-9:
                break
            chosen[ins[a]], chosen[outs[b]] = False, True
            total += caps[outs[b]] - caps[ins[a]]
        keep.extend(group[int(order[j])] for j in np.nonzero(chosen)[0])
    return keep


@dataclass
class YearRecord:
    year: int
    ldc: LoadDurationCurve
    clearing: ClearingResult
    capacity_mix: dict[PlantType, float]
    dispatch_by_type: dict[PlantType, list[float]]
    carbon_tax: float


@dataclass
class WorldState:
    config: ScenarioConfig
    year: int
    ldc: LoadDurationCurve
    gencos: list[GenCo]
    cost_table: CostTable
    availability_table: AvailabilityTable
    capacity_factors: CapacityFactorTable
    fuel_volatility: dict[Fuel, FuelVolatilityModel]
    history: History
    rng: RngStream
    yearly_results: list[YearRecord] = field(default_factory=list)
    _fleet: FleetArrays | None = field(default=None, repr=False)
    _fleet_year: int | None = field(default=None, repr=False)
    _plant_counter: int = field(default=0, repr=False)
    _batch: tuple | None = field(default=None, repr=False)

    def all_plants(self) -> list[PlantInstance]:
        return [p for g in self.gencos for p in g.plants]

    def plant_index(self) -> dict[str, PlantInstance]:
        return {p.plant_id: p for p in self.all_plants()}

    def next_plant_id(self, owner: str) -> str:
        self._plant_counter += 1
        return f"{owner}#{self._plant_counter:06d}"

    def fleet_arrays(self) -> FleetArrays:
        if self._fleet is None or self._fleet_year != self.year:
            live = [p for p in self.all_plants() if p.retirement_year > self.year]
            self._fleet = FleetArrays(live, self.ldc.n_segments)
            self._fleet_year = self.year
        return self._fleet

    def candidate_batch(self, menu: list) -> CandidateBatch:
        # Reused by every GenCo within a year; keyed on the menu object itself.
        if self._batch is None or self._batch[0] != self.year or self._batch[1] is not menu:
            self._batch = (self.year, menu, CandidateBatch(menu, self))
        return self._batch[2]

    def invalidate_fleet(self) -> None:
        self._fleet = None

    def capacity_mix(self, year: int | None = None) -> dict[PlantType, float]:
        year = self.year if year is None else year
        mix: dict[PlantType, float] = {t: 0.0 for t in PlantType}
        for p in self.all_plants():
            if p.status(year) is PlantStatus.OPERATING:
                mix[p.spec.plant_type] += p.spec.capacity
        return mix


def step_demand(ldc: LoadDurationCurve, growth: float) -> LoadDurationCurve:
    return ldc.scaled(1.0 + growth)


def _make_plant(row: RegistryRow, plant_id: str, world_tables, config: ScenarioConfig, rng: RngStream,
                n_segments: int) -> PlantInstance:
    cost_table, avail_table, cf_table = world_tables
    spec = lookup_or_interpolate(cost_table, row.plant_type, row.capacity_mw, row.construction_year)
    vom = sample_variable_om(spec.variable_om_cost, config.vom_uniform_lo, config.vom_uniform_hi,
                             rng, config.stochastic_enabled)
    return PlantInstance(
        plant_id=plant_id,
        spec=spec,
        owner=row.company,
        # Registry years are commissioning years.
        construction_start_year=row.construction_year - spec.lead_time,
        sampled_variable_om=vom,
        capacity_fraction_per_segment=cf_table.fractions(row.plant_type, n_segments),
        availability=avail_table.availability(row.plant_type, row.construction_year),
    )


def fit_default_volatility(order: tuple[int, int, int]) -> dict[Fuel, FuelVolatilityModel]:
    series: dict[str, list[float]] = defaultdict(list)
    with open(data_path("fuel_price_history.csv"), newline="") as fh:
        for rec in csv.DictReader(fh):
            series[rec["fuel"]].append(float(rec["price"]))
    return {Fuel(f): fit_fuel_volatility(v, order) for f, v in series.items()}


def init_world(config: ScenarioConfig, registries: Registries | None = None, rng: RngStream | None = None,
               cost_table: CostTable | None = None, availability_table: AvailabilityTable | None = None,
               capacity_factors: CapacityFactorTable | None = None,
               fuel_volatility: Mapping[Fuel, FuelVolatilityModel] | None = None) -> WorldState:
    """Build the initial world: fleet from the registries, GenCos with sampled
    discount rates and forecast windows, and a seeded pre-start history."""
    rng = RngStream(config.rng_seed) if rng is None else rng
    if registries is None:
        registries = load_registries(config.fleet.registry, config.fleet.companies)
    cost_table = load_default_cost_table() if cost_table is None else cost_table
    availability_table = load_default_availability() if availability_table is None else availability_table
    capacity_factors = load_default_capacity_factors() if capacity_factors is None else capacity_factors
    if fuel_volatility is None:
        fuel_volatility = fit_default_volatility(config.arima_order)

    plants = list(registries.plants)
    cash_scale = 1.0
    target = config.fleet.target_capacity_mw
    if target is not None and plants:
        fraction = target / registries.total_capacity
        plants = stratified_sample(plants, fraction, RngStream(config.rng_seed, FLEET_STREAM))
        if config.fleet.scale_cash:
            cash_scale = fraction

    companies = {c.company: c for c in registries.companies}
    for r in plants:
        companies.setdefault(r.company, CompanyRow(r.company, 0.0, None))
    lo, hi = config.forecast_window_range
    gencos = {}
    for name in sorted(companies):
        c = companies[name]
        wacc = sample_wacc(config.wacc_mean, config.wacc_std, rng, config.stochastic_enabled)
        if c.forecast_window is not None:
            window = c.forecast_window
        elif config.stochastic_enabled:
            window = rng.integers(lo, hi)
        else:
            window = (lo + hi) // 2
        gencos[name] = GenCo(name, name, c.cash * cash_scale, wacc, window, config.upfront_capital_fraction)

    n_seg = config.initial_ldc.n_segments
    tables = (cost_table, availability_table, capacity_factors)
    for i, row in enumerate(plants):
        gencos[row.company].plants.append(_make_plant(row, f"{row.company}@{i:06d}", tables, config, rng, n_seg))

    history = History()
    for k in range(config.history_years, 0, -1):
        y = config.start_year - k
        history.append(
            y,
            {f: config.fuel_price(f, config.start_year) for f in TRADED_FUELS},
            config.carbon_tax(config.start_year),
            config.initial_ldc.peak * (1.0 + config.demand_growth) ** (-k),
        )

    return WorldState(
        config=config,
        year=config.start_year,
        ldc=config.initial_ldc,
        gencos=list(gencos.values()),
        cost_table=cost_table,
        availability_table=availability_table,
        capacity_factors=capacity_factors,
        fuel_volatility=dict(fuel_volatility),
        history=history,
        rng=rng,
    )


def settle_accounts(genco: GenCo, clearing: ClearingResult, year: int, dividend_fraction: float = 0.0,
                    capital_from_year: int | None = None) -> GenCo:
    """Book one year of revenue and costs against the GenCo's cash.

    Dispatched energy earns the clearing price and costs the bid price
    (the plant's SRMC). Operating plants pay fixed charges. Plants whose
    construction started after ``capital_from_year`` pay the upfront share
    of that year's capital outlay; financed shares are serviced as loans.
    """
    revenue = 0.0
    variable = 0.0
    for seg in clearing.segments:
        for bid, mw in seg.accepted:
            if bid.owner == genco.id:
                energy = mw * seg.duration_hours
                revenue += energy * seg.smp
                variable += energy * bid.price
    fixed = 0.0
    capital = 0.0
    for p in genco.plants:
        status = p.status(year)
        if status is PlantStatus.OPERATING:
            fixed += p.spec.annual_fixed_cost_per_mw * p.spec.capacity
        t = year - p.construction_start_year
        if (capital_from_year is None or p.construction_start_year > capital_from_year) and 0 <= t <= p.spec.lead_time:
            capital += genco.upfront_capital_fraction * float(capital_schedule(p.spec)[t])
    debt = 0.0
    remaining = []
    for loan in genco.loans:
        if year >= loan.start_year and loan.remaining_years > 0:
            debt += loan.annual_payment
            loan.remaining_years -= 1
        if loan.remaining_years > 0:
            remaining.append(loan)
    genco.loans = remaining
    profit = revenue - variable - fixed
    dividend = dividend_fraction * max(0.0, profit)
    genco.cash_balance += profit - capital - debt - dividend
    return genco


def genco_prices(world: WorldState, genco: GenCo) -> MarketPrices:
    cfg = world.config
    fuel = {}
    for f in TRADED_FUELS:
        fuel[f] = sample_fuel_price(cfg.fuel_price(f, world.year), world.fuel_volatility.get(f), world.rng,
                                    cfg.stochastic_enabled)
    return MarketPrices(fuel, cfg.carbon_tax(world.year), dict(cfg.emission_factors))


def clear_current_year(world: WorldState) -> ClearingResult:
    """Sample this year's purchase prices, collect bids and clear the market."""
    bids = []
    for genco in world.gencos:
        bids.extend(make_bids(genco, world.ldc, world.year, genco_prices(world, genco)))
    return clear_year(bids, world.ldc, world.config.lost_load_price)


def dispatch_by_type(world: WorldState, clearing: ClearingResult) -> dict[PlantType, list[float]]:
    index = world.plant_index()
    out: dict[PlantType, list[float]] = {t: [0.0] * len(clearing.segments) for t in PlantType}
    for k, seg in enumerate(clearing.segments):
        for bid, mw in seg.accepted:
            out[index[bid.plant_id].spec.plant_type][k] += mw
    return out


def step_year(world: WorldState) -> WorldState:
    """Advance the world by one year: clear, settle, invest, grow demand."""
    cfg = world.config
    year = world.year
    clearing = clear_current_year(world)
    for genco in world.gencos:
        settle_accounts(genco, clearing, year, cfg.dividend_fraction, capital_from_year=cfg.start_year)
    record = YearRecord(year, world.ldc, clearing, world.capacity_mix(year), dispatch_by_type(world, clearing),
                        cfg.carbon_tax(year))
    if cfg.investment.enabled:
        menu = candidate_menu(world)
        for genco in sorted(world.gencos, key=lambda g: g.id):
            invest(genco, menu, world)
    demand_now = world.ldc.peak
    world.ldc = step_demand(world.ldc, cfg.demand_growth)
    world.history.append(year, {f: cfg.fuel_price(f, year) for f in TRADED_FUELS}, cfg.carbon_tax(year),
                         demand_now, tuple(clearing.smp()))
    world.yearly_results.append(record)
    world.year = year + 1
    world.invalidate_fleet()
    return world


def run_world(world: WorldState, n_years: int | None = None) -> WorldState:
    n = world.config.n_years if n_years is None else n_years
    for _ in range(n):
        step_year(world)
    return world
