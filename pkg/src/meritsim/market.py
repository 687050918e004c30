"""Power exchange: SRMC bids and uniform-price merit-order clearing."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .domain import (
    Bid,
    ClearingResult,
    Fuel,
    GenCo,
    LoadDurationCurve,
    PlantInstance,
    SegmentClearing,
)


@dataclass(frozen=True)
class SrmcInputs:
    fuel_price: float
    carbon_price: float
    emission_factor: float
    efficiency: float
    variable_om: float

    def __post_init__(self):
        if not self.efficiency > 0:
            raise ValueError("efficiency must be positive")
        if min(self.fuel_price, self.carbon_price, self.emission_factor, self.variable_om) < 0:
            raise ValueError("SRMC inputs must be non-negative")


def srmc(inputs: SrmcInputs) -> float:
    """Fuel and carbon per MWh of output plus variable O&M."""
    i = inputs
    return i.fuel_price / i.efficiency + i.carbon_price * i.emission_factor / i.efficiency + i.variable_om


@dataclass(frozen=True)
class MarketPrices:
    """Input prices a GenCo faces in one year."""

    fuel: Mapping[Fuel, float]
    carbon: float
    emission_factors: Mapping[Fuel, float]

    def fuel_price(self, fuel: Fuel) -> float:
        return 0.0 if fuel is Fuel.NONE else float(self.fuel.get(fuel, 0.0))

    def emission_factor(self, fuel: Fuel) -> float:
        return 0.0 if fuel is Fuel.NONE else float(self.emission_factors.get(fuel, 0.0))


def plant_srmc(plant: PlantInstance, prices: MarketPrices, variable_om: float | None = None) -> float:
    fuel = plant.spec.plant_type.fuel
    vom = plant.sampled_variable_om if variable_om is None else variable_om
    if fuel is Fuel.NONE:
        return vom
    return srmc(SrmcInputs(prices.fuel_price(fuel), prices.carbon, prices.emission_factor(fuel),
                           plant.spec.efficiency, vom))


def make_bids(genco: GenCo, ldc: LoadDurationCurve, year: int, prices: MarketPrices) -> list[Bid]:
    """One SRMC bid per operating plant per demand segment."""
    bids = []
    for plant in genco.operating_plants(year):
        price = plant_srmc(plant, prices)
        nameplate = plant.spec.capacity * plant.availability
        for k, frac in enumerate(plant.capacity_fraction_per_segment[:ldc.n_segments]):
            bids.append(Bid(plant.plant_id, k, nameplate * frac, price, genco.id))
    return bids


def merit_order(bids: Iterable[Bid]) -> list[Bid]:
    # Ties: larger offer first, then plant id, so replays are deterministic.
    return sorted(bids, key=lambda b: (b.price, -b.offered_capacity, b.plant_id))


def clear_segment(bids: Sequence[Bid], demand_mw: float, lost_load_price: float,
                  segment_index: int = 0, duration_hours: float = 0.0) -> SegmentClearing:
    """Accept the cheapest bids until demand is covered; all are paid the marginal price."""
    if demand_mw < 0:
        raise ValueError("demand must be non-negative")
    if demand_mw == 0:
        return SegmentClearing(segment_index, 0.0, duration_hours, 0.0, (), 0.0)
    accepted: list[tuple[Bid, float]] = []
    cumulative = 0.0
    for bid in merit_order(bids):
        if bid.offered_capacity <= 0:
            continue
        if cumulative + bid.offered_capacity >= demand_mw:
            accepted.append((bid, demand_mw - cumulative))
            return SegmentClearing(segment_index, demand_mw, duration_hours, bid.price, tuple(accepted), 0.0)
        accepted.append((bid, bid.offered_capacity))
        cumulative += bid.offered_capacity
    return SegmentClearing(segment_index, demand_mw, duration_hours, float(lost_load_price),
                           tuple(accepted), demand_mw - cumulative)


def clear_year(all_bids: Iterable[Bid], ldc: LoadDurationCurve, lost_load_price: float) -> ClearingResult:
    by_segment: list[list[Bid]] = [[] for _ in range(ldc.n_segments)]
    for bid in all_bids:
        by_segment[bid.segment_index].append(bid)
    return ClearingResult(tuple(
        clear_segment(by_segment[k], d, lost_load_price, k, h)
        for k, (d, h) in enumerate(ldc.segments)
    ))


def stack_prices(prices: np.ndarray, offered: np.ndarray, demand: np.ndarray,
                 lost_load_price: float) -> tuple[np.ndarray, np.ndarray]:
    """Array form of per-segment clearing used for forward market snapshots.

    ``prices`` has one entry per unit, ``offered`` is (units, segments) and
    ``demand`` one entry per segment. Returns the clearing price per segment
    and a mask of segments where supply fell short.
    """
    demand = np.asarray(demand, dtype=float)
    smp = np.zeros(demand.shape)
    if prices.size == 0:
        scarce = demand > 0
        smp[scarce] = lost_load_price
        return smp, scarce
    order = np.argsort(prices, kind="stable")
    p_sorted = prices[order]
    cum = np.cumsum(offered[order], axis=0)
    covered = cum >= demand[None, :]
    scarce = ~covered[-1] & (demand > 0)
    idx = covered.argmax(axis=0)
    smp = np.where(scarce, lost_load_price, p_sorted[idx])
    smp = np.where(demand > 0, smp, 0.0)
    return smp, scarce
