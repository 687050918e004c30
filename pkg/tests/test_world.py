import math
from collections import defaultdict

import numpy as np
import pytest

from meritsim.domain import Bid, ClearingResult, InvestmentSettings, Loan, PlantType, SegmentClearing, validate_ldc
from meritsim.stochastics import RngStream
from meritsim.world import (
    CompanyRow,
    Registries,
    RegistryRow,
    init_world,
    load_registries,
    run_world,
    settle_accounts,
    step_demand,
    stratified_sample,
)

from conftest import make_config, make_genco, make_plant, make_spec


def test_step_demand():
    ldc = validate_ldc([(50_000, 4380), (20_000, 4380)])
    assert step_demand(ldc, 0.0) == ldc
    down = step_demand(ldc, -0.01)
    assert down.peak == pytest.approx(49_500)
    assert down.durations == ldc.durations
    twice = step_demand(step_demand(ldc, 0.01), 0.01)
    assert twice.peak == pytest.approx(50_000 * 1.0201)


def one_segment(smp, accepted):
    return ClearingResult((SegmentClearing(0, sum(m for _, m in accepted), 1.0, smp, tuple(accepted), 0.0),))


def test_settle_margin():
    genco = make_genco(plants=[make_plant(vom=3.0)], cash=1000.0)
    settle_accounts(genco, one_segment(50.0, [(Bid("p", 0, 100, 43.0, "g"), 100.0)]), 2018)
    assert genco.cash_balance == pytest.approx(1700.0)


def test_settle_ignores_other_owners_and_empty_gencos():
    genco = make_genco(cash=5.0)
    settle_accounts(genco, one_segment(50.0, [(Bid("x", 0, 100, 43.0, "h"), 100.0)]), 2018)
    assert genco.cash_balance == 5.0


def test_settle_fixed_costs_loans_dividends():
    plant = make_plant(spec=make_spec(capacity=10, fixed_om_cost=2.0))
    genco = make_genco(plants=[plant], cash=0.0)
    genco.loans.append(Loan(100.0, 0.05, 1, 30.0, 2010))
    settle_accounts(genco, one_segment(50.0, [(Bid("p", 0, 10, 40.0, "g"), 10.0)]), 2018, dividend_fraction=0.5)
    profit = 10 * 10 - 20
    assert genco.cash_balance == pytest.approx(profit - 30 - 0.5 * profit)
    assert genco.loans == []


def test_settle_capital_during_construction():
    spec = make_spec(construction_period=2, construction_cost=10.0, capacity=10)
    genco = make_genco(plants=[make_plant(spec=spec, start=2018)], upfront=0.25)
    settle_accounts(genco, ClearingResult(()), 2018)
    assert genco.cash_balance == pytest.approx(-0.25 * 50)


def empty_world(**kw):
    return init_world(make_config(**kw), Registries((), ()), fuel_volatility={})


def test_empty_registry_clears_at_lost_load():
    world = run_world(empty_world(), 2)
    for rec in world.yearly_results:
        assert list(rec.clearing.smp()) == [6000.0]
        assert rec.clearing.segments[0].unmet_demand == 100.0


def test_zero_steps_leave_world_alone():
    world = empty_world()
    run_world(world, 0)
    assert world.year == 2018 and world.yearly_results == []


def test_historic_row_resolves():
    rows = (RegistryRow("a", PlantType.CCGT, 1200, 2010),)
    world = init_world(make_config(), Registries(rows, ()), fuel_volatility={})
    spec = world.gencos[0].plants[0].spec
    assert (spec.efficiency, spec.fixed_om_cost) == (0.54, 73_981)
    assert world.gencos[0].plants[0].operating_start_year == 2010


def shares(rows):
    cap = defaultdict(float)
    for r in rows:
        cap[r.plant_type] += r.capacity_mw
    total = sum(cap.values())
    return {t: 100 * v / total for t, v in cap.items()}


def test_stratified_sample_keeps_mix():
    rows = list(load_registries().plants)
    ref = shares(rows)
    for seed in range(20):
        sample = stratified_sample(rows, 0.1, RngStream(seed))
        total = sum(r.capacity_mw for r in sample)
        assert total == pytest.approx(0.1 * sum(r.capacity_mw for r in rows), rel=0.01)
        got = shares(sample)
        for t in ref:
            assert abs(got.get(t, 0.0) - ref[t]) <= 2.0


FLEET = (
    RegistryRow("a", PlantType.CCGT, 60, 2010),
    RegistryRow("a", PlantType.ONSHORE_WIND, 30, 2012),
    RegistryRow("b", PlantType.COAL, 50, 1995),
    RegistryRow("b", PlantType.NUCLEAR, 40, 1990),
)


def fleet_world(stochastic=False, seed=3, invest=True):
    ldc = validate_ldc([(150, 2000), (110, 3000), (70, 3760)])
    cfg = make_config(n_years=6, initial_ldc=ldc, stochastic_enabled=stochastic, rng_seed=seed, demand_growth=0.02,
                      investment=InvestmentSettings(enabled=invest, lookahead_years=5, block_sizes_mw=(20, 40),
                                                    max_candidate_mw=100))
    regs = Registries(FLEET, (CompanyRow("a", 1e8), CompanyRow("b", 1e8)))
    return init_world(cfg, regs)


def test_world_invariants():
    world = run_world(fleet_world(stochastic=True))
    assert len(world.history) == world.config.history_years + 6
    assert [r.year for r in world.yearly_results] == list(range(2018, 2024))
    assert world.year == 2024
    for rec in world.yearly_results:
        rev = rec.clearing.revenue_by_plant()
        market = math.fsum(s.smp * s.dispatched * s.duration_hours for s in rec.clearing.segments)
        assert math.fsum(rev.values()) == pytest.approx(market, rel=1e-12)
        for seg, demand in zip(rec.clearing.segments, rec.ldc.demands):
            assert seg.dispatched <= demand + 1e-9
    for plant in world.all_plants():
        statuses = [plant.status(y) for y in range(2000, 2060)]
        assert statuses == sorted(statuses)


def test_deterministic_runs_are_identical():
    a = run_world(fleet_world())
    b = run_world(fleet_world())
    for ra, rb in zip(a.yearly_results, b.yearly_results):
        assert ra.clearing.smp().tobytes() == rb.clearing.smp().tobytes()
        assert ra.capacity_mix == rb.capacity_mix
    assert [g.cash_balance for g in a.gencos] == [g.cash_balance for g in b.gencos]


def test_seeds_change_stochastic_runs():
    a = run_world(fleet_world(stochastic=True, seed=1, invest=False))
    b = run_world(fleet_world(stochastic=True, seed=2, invest=False))
    pa = np.concatenate([r.clearing.smp() for r in a.yearly_results])
    pb = np.concatenate([r.clearing.smp() for r in b.yearly_results])
    assert not np.array_equal(pa, pb)
