import pytest

from meritsim.domain import (
    Fuel,
    FleetSettings,
    GenCo,
    InvestmentSettings,
    PlantInstance,
    PlantSpec,
    PlantType,
    ScenarioConfig,
    validate_ldc,
)

FLAT_LDC = validate_ldc([(100.0, 8760.0)])


def make_spec(plant_type=PlantType.CCGT, capacity=100.0, **kw):
    base = dict(
        cost_basis_year=2018, efficiency=0.5, operating_period=25, pre_dev_period=0,
        construction_period=0, pre_dev_cost=0.0, construction_cost=0.0, infrastructure_cost=0.0,
        fixed_om_cost=0.0, variable_om_cost=0.0,
    )
    base.update(kw)
    return PlantSpec(plant_type, capacity, **base)


def make_plant(plant_id="p", spec=None, owner="g", start=2000, vom=None, fractions=(1.0,), availability=1.0):
    spec = make_spec() if spec is None else spec
    vom = spec.variable_om_cost if vom is None else vom
    return PlantInstance(plant_id, spec, owner, start, vom, fractions, availability)


def make_genco(gid="g", plants=(), cash=0.0, rate=0.08, window=5, upfront=0.25):
    return GenCo(gid, gid, cash, rate, window, upfront, list(plants))


def make_config(**kw):
    base = dict(
        start_year=2018, n_years=3, demand_growth=0.0, initial_ldc=FLAT_LDC,
        fuel_price_trajectory={Fuel.GAS: (20.0,), Fuel.COAL: (9.0,), Fuel.URANIUM: (5.0,)},
        carbon_tax_schedule=(0.0,), emission_factors={Fuel.GAS: 0.184, Fuel.COAL: 0.341},
        lost_load_price=6000.0, stochastic_enabled=False,
        investment=InvestmentSettings(enabled=False), fleet=FleetSettings(),
    )
    base.update(kw)
    return ScenarioConfig(**base)


@pytest.fixture
def spec_factory():
    return make_spec
