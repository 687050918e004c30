import numpy as np
import pytest

from meritsim.forecasting import FuelVolatilityModel
from meritsim.stochastics import (
    WACC_BOUNDS,
    RngStream,
    sample_fuel_price,
    sample_variable_om,
    sample_wacc,
)

N = 10_000


def draws(fn, n=N, seed=11):
    rng = RngStream(seed)
    return np.array([fn(rng) for _ in range(n)])


def test_wacc_degenerate():
    assert sample_wacc(0.09, 0.0, RngStream(1)) == 0.09
    assert sample_wacc(0.09, 0.03, RngStream(1), enabled=False) == 0.09


def test_wacc_moments():
    x = draws(lambda r: sample_wacc(0.09, 0.03, r))
    assert x.mean() == pytest.approx(0.09, abs=0.001)
    assert x.std(ddof=1) == pytest.approx(0.03, abs=0.002)
    assert np.all((x > WACC_BOUNDS[0]) & (x < WACC_BOUNDS[1]))


def test_wacc_seeded_sequence_repeats():
    a = draws(lambda r: sample_wacc(0.09, 0.03, r), n=50)
    b = draws(lambda r: sample_wacc(0.09, 0.03, r), n=50)
    assert a.tobytes() == b.tobytes()


def test_vom_bounds_and_mean():
    x = draws(lambda r: sample_variable_om(3.0, 0.3, 2.0, r))
    assert x.min() >= 0.9 and x.max() <= 6.0
    assert x.mean() == pytest.approx(3.45, abs=0.05)


def test_vom_narrow_interval():
    eps = 1e-6
    x = draws(lambda r: sample_variable_om(3.0, 2.0 - eps, 2.0, r), n=100)
    assert np.all(np.abs(x - 6.0) <= eps * 3.0)
    with pytest.raises(ValueError):
        sample_variable_om(3.0, 2.0, 2.0, RngStream(0))


def test_vom_disabled_returns_mean():
    assert sample_variable_om(3.0, 0.3, 2.0, RngStream(0), enabled=False) == 3.0


def test_fuel_price_std():
    model = FuelVolatilityModel((1, 1, 1), 2.0)
    x = draws(lambda r: sample_fuel_price(20.0, model, r))
    assert x.std(ddof=1) == pytest.approx(2.0, abs=0.1)
    assert sample_fuel_price(20.0, FuelVolatilityModel((0, 0, 0), 0.0), RngStream(0)) == 20.0


def test_fuel_price_floor():
    model = FuelVolatilityModel((1, 1, 1), 50.0)
    x = draws(lambda r: sample_fuel_price(0.1, model, r), n=2000)
    assert x.min() >= 0.0


def test_streams_differ_and_repeat():
    a = RngStream(5, 0).generator.random(20)
    b = RngStream(5, 1).generator.random(20)
    c = RngStream(5, 0).generator.random(20)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, c)


def test_integers_inclusive():
    rng = RngStream(3)
    vals = {rng.integers(3, 5) for _ in range(200)}
    assert vals == {3, 4, 5}
