"""NPV evaluation of candidate plants against forecast future markets."""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .costs import capital_schedule, discount_factors, lookup_or_interpolate, operating_mask
from .domain import Fuel, GenCo, LoadDurationCurve, Loan, PlantInstance, PlantSpec
from .errors import ForecastUnavailable, InsufficientData
from .forecasting import Forecast, fit_linear, forecast_prices
from .market import stack_prices
from .stochastics import sample_variable_om

if TYPE_CHECKING:
    from .world import WorldState

_FUELS = (Fuel.NONE, Fuel.GAS, Fuel.COAL, Fuel.URANIUM)
_FUEL_INDEX = {f: i for i, f in enumerate(_FUELS)}


def npv(cash_flows: Sequence[float], discount_rate: float) -> float:
    """Sum of ``R_t / (1 + i)**t`` for ``t = 0, 1, ...``."""
    if discount_rate <= -1:
        raise ValueError("discount rate must exceed -1")
    r = np.asarray(cash_flows, dtype=float)
    return float(np.sum(r / (1.0 + discount_rate) ** np.arange(len(r))))


@dataclass(frozen=True)
class FutureMarketSnapshot:
    year: int
    predicted_ldc: LoadDurationCurve
    smp: np.ndarray
    scarce: np.ndarray
    substituted: np.ndarray
    lost_load_price: float

    def __post_init__(self):
        if np.any(self.smp < 0):
            raise ValueError("snapshot prices must be non-negative")


@dataclass(frozen=True)
class NpvEvaluation:
    candidate: PlantSpec
    npv: float
    yearly_cash_flows: np.ndarray
    discount_rate: float
    horizon: int


class FleetArrays:
    """Column view of every plant in the world for fast forward clearing."""

    def __init__(self, plants: Iterable[PlantInstance], n_segments: int):
        plants = list(plants)
        n = len(plants)
        self.n_segments = n_segments
        self.op_start = np.array([p.operating_start_year for p in plants], dtype=int)
        self.retire = np.array([p.retirement_year for p in plants], dtype=int)
        self.fuel = np.array([_FUEL_INDEX[p.spec.plant_type.fuel] for p in plants], dtype=int)
        eff = np.array([p.spec.efficiency for p in plants], dtype=float)
        self.inv_eff = np.where(self.fuel > 0, 1.0 / np.where(eff > 0, eff, 1.0), 0.0)
        self.vom = np.array([p.sampled_variable_om for p in plants], dtype=float)
        firm = np.array([p.spec.capacity * p.availability for p in plants], dtype=float)
        cf = np.array([p.capacity_fraction_per_segment[:n_segments] for p in plants], dtype=float).reshape(n, n_segments)
        self.offered = firm[:, None] * cf

    def operating(self, year: int) -> np.ndarray:
        return (self.op_start <= year) & (year < self.retire)

    def srmc(self, fuel_prices: dict[Fuel, float], carbon: float, emission_factors: dict[Fuel, float]) -> np.ndarray:
        fp = np.array([0.0 if f is Fuel.NONE else fuel_prices.get(f, 0.0) for f in _FUELS])
        ef = np.array([0.0 if f is Fuel.NONE else emission_factors.get(f, 0.0) for f in _FUELS])
        return (fp[self.fuel] + carbon * ef[self.fuel]) * self.inv_eff + self.vom


def substitute_lost_load(snapshot: FutureMarketSnapshot) -> FutureMarketSnapshot:
    """Replace scarcity prices with a price-vs-demand regression over normally
    cleared segments; with none cleared the lost-load price stands."""
    scarce = np.asarray(snapshot.scarce, dtype=bool)
    if not scarce.any():
        return snapshot
    demand = snapshot.predicted_ldc.demand_array()
    normal = ~scarce & (demand > 0)
    if not normal.any():
        return snapshot
    smp = snapshot.smp.copy()
    if normal.sum() == 1 or np.ptp(demand[normal]) == 0:
        predicted = np.full(scarce.sum(), smp[normal].mean())
    else:
        fit = fit_linear(zip(demand[normal], smp[normal]))
        predicted = fit.predict(demand[scarce])
    smp[scarce] = np.clip(predicted, 0.0, snapshot.lost_load_price)
    return FutureMarketSnapshot(snapshot.year, snapshot.predicted_ldc, smp, snapshot.scarce,
                                scarce.copy(), snapshot.lost_load_price)


def _forecast_at(forecast: Forecast, year: int) -> int:
    i = int(year - forecast.years[0])
    return min(max(i, 0), len(forecast.years) - 1)


def simulate_future_market(world_state: "WorldState", forecast: Forecast, target_year: int,
                           fleet: FleetArrays | None = None) -> FutureMarketSnapshot:
    """Clear the expected fleet of ``target_year`` against forecast prices and demand."""
    if target_year <= world_state.year:
        raise ValueError("target year must lie in the future")
    fleet = world_state.fleet_arrays() if fleet is None else fleet
    cfg = world_state.config
    i = _forecast_at(forecast, target_year)
    ldc = world_state.ldc.scaled(float(forecast.demand_multiplier[i]))
    mask = fleet.operating(target_year)
    prices = fleet.srmc({f: float(v[i]) for f, v in forecast.fuel.items()},
                        float(forecast.carbon[i]), dict(cfg.emission_factors))[mask]
    smp, scarce = stack_prices(prices, fleet.offered[mask], ldc.demand_array(), cfg.lost_load_price)
    return FutureMarketSnapshot(target_year, ldc, smp, scarce, np.zeros_like(scarce), cfg.lost_load_price)


def _future_markets(world_state: "WorldState", forecast: Forecast, fleet: FleetArrays) -> list[FutureMarketSnapshot]:
    """All forecast years at once; same result as calling ``simulate_future_market`` per year."""
    cfg = world_state.config
    years = np.asarray(forecast.years, dtype=int)
    n_years = len(years)
    if n_years == 0:
        return []
    base = world_state.ldc
    demand = base.demand_array()[None, :] * np.asarray(forecast.demand_multiplier, dtype=float)[:, None]
    if fleet.fuel.size == 0:
        scarce = demand > 0
        smp = np.where(scarce, cfg.lost_load_price, 0.0)
    else:
        fp = np.zeros((n_years, len(_FUELS)))
        ef = np.zeros(len(_FUELS))
        for f, k in _FUEL_INDEX.items():
            if f is not Fuel.NONE:
                fp[:, k] = forecast.fuel[f] if f in forecast.fuel else 0.0
                ef[k] = cfg.emission_factors.get(f, 0.0)
        cost = fp + np.asarray(forecast.carbon, dtype=float)[:, None] * ef[None, :]
        prices = cost[:, fleet.fuel] * fleet.inv_eff[None, :] + fleet.vom[None, :]
        live = (fleet.op_start[None, :] <= years[:, None]) & (years[:, None] < fleet.retire[None, :])
        order = np.argsort(np.where(live, prices, np.inf), axis=1, kind="stable")
        offered = np.where(live[:, :, None], fleet.offered[None, :, :], 0.0)
        cum = np.cumsum(np.take_along_axis(offered, order[:, :, None], axis=1), axis=1)
        covered = cum >= demand[:, None, :]
        scarce = ~covered[:, -1, :] & (demand > 0)
        first = covered.argmax(axis=1)
        p_sorted = np.take_along_axis(prices, order, axis=1)
        smp = np.take_along_axis(p_sorted, first, axis=1)
        smp = np.where(scarce, cfg.lost_load_price, smp)
        smp = np.where(demand > 0, smp, 0.0)
    out = []
    for y in range(n_years):
        ldc = base.scaled(float(forecast.demand_multiplier[y]))
        out.append(FutureMarketSnapshot(int(years[y]), ldc, smp[y], scarce[y], np.zeros_like(scarce[y]),
                                        cfg.lost_load_price))
    return out


def future_snapshots(world_state: "WorldState", genco: GenCo) -> tuple[Forecast, list[FutureMarketSnapshot]]:
    """Substituted snapshots for each year up to the look-ahead; later years reuse the last one."""
    lookahead = max(1, world_state.config.investment.lookahead_years)
    try:
        forecast = forecast_prices(genco, world_state.history, lookahead,
                                   first_year=world_state.year + 1, base_year=world_state.year)
    except InsufficientData as exc:
        raise ForecastUnavailable(str(exc)) from exc
    snaps = [substitute_lost_load(s) for s in _future_markets(world_state, forecast, world_state.fleet_arrays())]
    return forecast, snaps


def candidate_cash_flows(spec: PlantSpec, start_year: int, smp: np.ndarray, durations: np.ndarray,
                         offered: np.ndarray, srmc: np.ndarray) -> np.ndarray:
    """Net cash flow per year ``t = 0..lifetime`` from construction start.

    ``smp`` is (operating years, segments) and ``srmc`` one value per
    operating year. The candidate is a price taker: it runs in a segment
    whenever its SRMC is below the expected price there.
    """
    flows = -capital_schedule(spec)
    op = operating_mask(spec)
    n_op = int(op.sum())
    smp = np.asarray(smp, dtype=float).reshape(n_op, -1)
    srmc = np.asarray(srmc, dtype=float).reshape(n_op)
    margin = np.maximum(smp - srmc[:, None], 0.0) @ (offered * durations)
    flows[op] += margin - spec.annual_fixed_cost_per_mw * spec.capacity
    return flows


def evaluate_candidate(genco: GenCo, candidate_spec: PlantSpec, world_state: "WorldState",
                       snapshots: Sequence[FutureMarketSnapshot] | None = None,
                       forecast: Forecast | None = None) -> NpvEvaluation:
    if snapshots is None or forecast is None:
        forecast, snapshots = future_snapshots(world_state, genco)
    spec = candidate_spec
    start = world_state.year + 1
    op = operating_mask(spec)
    op_years = start + np.nonzero(op)[0]
    idx = np.clip(op_years - snapshots[0].year, 0, len(snapshots) - 1)
    smp = np.stack([snapshots[i].smp for i in idx]) if len(idx) else np.zeros((0, world_state.ldc.n_segments))

    fuel = spec.plant_type.fuel
    cfg = world_state.config
    if fuel is Fuel.NONE:
        srmc = np.full(len(idx), spec.variable_om_cost)
    else:
        fidx = np.clip(op_years - forecast.years[0], 0, len(forecast.years) - 1)
        fp = forecast.fuel[fuel][fidx]
        carbon = forecast.carbon[fidx]
        srmc = (fp + carbon * cfg.emission_factor(fuel)) / spec.efficiency + spec.variable_om_cost

    avail = world_state.availability_table.availability(spec.plant_type, start + spec.lead_time)
    cf = np.asarray(world_state.capacity_factors.fractions(spec.plant_type, world_state.ldc.n_segments))
    offered = spec.capacity * avail * cf
    flows = candidate_cash_flows(spec, start, smp, world_state.ldc.duration_array(), offered, srmc)
    return NpvEvaluation(spec, npv(flows, genco.discount_rate), flows, genco.discount_rate, spec.lifetime)


class CandidateBatch:
    """Static arrays for a candidate menu, grouped by technology, so a whole
    menu can be valued in a handful of array operations."""

    def __init__(self, specs: Sequence[PlantSpec], world_state: "WorldState"):
        self.specs = list(specs)
        start = world_state.year + 1
        n_seg = world_state.ldc.n_segments
        durations = world_state.ldc.duration_array()
        horizon = max((s.lifetime + 1 for s in self.specs), default=1)
        self.horizon = horizon
        self.capital = np.zeros((len(self.specs), horizon))
        self.op = np.zeros((len(self.specs), horizon), dtype=bool)
        self.groups: dict = {}
        for j, s in enumerate(self.specs):
            self.capital[j, :s.lifetime + 1] = capital_schedule(s)
            self.op[j, :s.lifetime + 1] = operating_mask(s)
            self.groups.setdefault(s.plant_type, []).append(j)
        self.fixed = np.array([s.annual_fixed_cost_per_mw * s.capacity for s in self.specs])
        self.weights = {}
        for ptype, idx in self.groups.items():
            cf = np.asarray(world_state.capacity_factors.fractions(ptype, n_seg))
            avail = np.array([world_state.availability_table.availability(ptype, start + self.specs[j].lead_time)
                              for j in idx])
            cap = np.array([self.specs[j].capacity for j in idx])
            # MWh per unit of price margin, per candidate and segment.
            self.weights[ptype] = (cap * avail)[:, None] * (cf * durations)[None, :]
        self.groups = {t: np.array(v) for t, v in self.groups.items()}

    def npvs(self, world_state: "WorldState", snapshots: Sequence[FutureMarketSnapshot], forecast: Forecast,
             discount_rate: float) -> np.ndarray:
        """NPV of every candidate against the same snapshots as ``evaluate_candidate``."""
        start = world_state.year + 1
        years = start + np.arange(self.horizon)
        smp = np.stack([s.smp for s in snapshots])[np.clip(years - snapshots[0].year, 0, len(snapshots) - 1)]
        fidx = np.clip(years - forecast.years[0], 0, len(forecast.years) - 1)
        carbon = forecast.carbon[fidx]
        revenue = np.zeros((len(self.specs), self.horizon))
        for ptype, idx in self.groups.items():
            fuel = ptype.fuel
            vom = np.array([self.specs[j].variable_om_cost for j in idx])
            if fuel is Fuel.NONE:
                srmc = np.repeat(vom[:, None], self.horizon, axis=1)
            else:
                eff = np.array([self.specs[j].efficiency for j in idx])
                cost = forecast.fuel[fuel][fidx] + carbon * world_state.config.emission_factor(fuel)
                srmc = cost[None, :] / eff[:, None] + vom[:, None]
            margin = np.maximum(smp[None, :, :] - srmc[:, :, None], 0.0)
            revenue[idx] = np.einsum("cak,ck->ca", margin, self.weights[ptype])
        flows = np.where(self.op, revenue - self.fixed[:, None], 0.0) - self.capital
        return flows @ discount_factors(self.horizon, discount_rate)


def candidate_menu(world_state: "WorldState") -> list[PlantSpec]:
    """Every allowed technology at its table capacities for the nearest cost
    year, plus the configured block sizes."""
    table = world_state.cost_table
    settings = world_state.config.investment
    menu = []
    for ptype in settings.candidate_types:
        if ptype not in table:
            continue
        caps = sorted(set(table.capacities(ptype, world_state.year)) | set(settings.block_sizes_mw))
        if settings.max_candidate_mw is not None:
            caps = [c for c in caps if c <= settings.max_candidate_mw]
        menu.extend(lookup_or_interpolate(table, ptype, c, world_state.year) for c in caps)
    return menu


def level_payment(principal: float, rate: float, years: int) -> float:
    if years <= 0:
        return principal
    if rate == 0:
        return principal / years
    return principal * rate / (1.0 - (1.0 + rate) ** -years)


def pending_upfront(genco: GenCo, year: int) -> float:
    """Upfront capital the GenCo still owes on plants not yet operating."""
    total = 0.0
    for p in genco.plants:
        elapsed = year - p.construction_start_year
        if elapsed <= p.spec.lead_time:
            sched = capital_schedule(p.spec)
            total += genco.upfront_capital_fraction * float(sched[max(elapsed, 0):].sum())
    return total


def commit(genco: GenCo, spec: PlantSpec, world_state: "WorldState") -> PlantInstance:
    start = world_state.year + 1
    cfg = world_state.config
    vom = sample_variable_om(spec.variable_om_cost, cfg.vom_uniform_lo, cfg.vom_uniform_hi,
                             world_state.rng, cfg.stochastic_enabled)
    plant = PlantInstance(
        plant_id=world_state.next_plant_id(genco.id),
        spec=spec,
        owner=genco.id,
        construction_start_year=start,
        sampled_variable_om=vom,
        capacity_fraction_per_segment=world_state.capacity_factors.fractions(spec.plant_type, world_state.ldc.n_segments),
        availability=world_state.availability_table.availability(spec.plant_type, start + spec.lead_time),
    )
    genco.plants.append(plant)
    financed = (1.0 - genco.upfront_capital_fraction) * spec.total_capital_cost()
    if financed > 0:
        years = int(round(spec.operating_period))
        genco.loans.append(Loan(financed, genco.discount_rate, years,
                                level_payment(financed, genco.discount_rate, years), plant.operating_start_year))
    world_state.invalidate_fleet()
    return plant


def invest(genco: GenCo, menu_of_candidates: Sequence[PlantSpec], world_state: "WorldState") -> list[PlantInstance]:
    """Commit the best affordable positive-NPV candidates, one at a time,
    re-forecasting the market after each commitment."""
    settings = world_state.config.investment
    if settings.freeze_when_cash_negative and genco.cash_balance < 0:
        return []
    committed = []
    if not menu_of_candidates:
        return committed
    batch = world_state.candidate_batch(menu_of_candidates)
    upfront = genco.upfront_capital_fraction * np.array([s.total_capital_cost() for s in batch.specs])
    for _ in range(settings.max_per_year):
        forecast, snaps = future_snapshots(world_state, genco)
        free_cash = genco.cash_balance - pending_upfront(genco, world_state.year + 1)
        values = batch.npvs(world_state, snaps, forecast, genco.discount_rate)
        values = np.where((upfront <= free_cash) & np.isfinite(values), values, -np.inf)
        j = int(np.argmax(values))
        if not values[j] > 0:
            break
        committed.append(commit(genco, batch.specs[j], world_state))
    return committed
