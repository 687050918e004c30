import numpy as np
import pytest
from hypothesis import given, strategies as st

from meritsim.domain import Fuel
from meritsim.errors import InsufficientData
from meritsim.forecasting import (
    History,
    fit_demand,
    fit_fuel_volatility,
    fit_linear,
    forecast_prices,
)

from conftest import make_genco


def test_fit_linear_examples():
    f = fit_linear([(0, 10), (1, 12), (2, 14)])
    assert (f.slope, f.intercept) == pytest.approx((2, 10))
    f = fit_linear([(0, 7), (1, 7), (2, 7)])
    assert (f.slope, f.intercept) == (0, 7)
    f = fit_linear([(0, 0), (1, 1), (2, 1)])
    assert f.slope == pytest.approx(0.5)
    assert f.intercept == pytest.approx(1 / 6)
    with pytest.raises(InsufficientData):
        fit_linear([(0, 1)])


finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(finite, finite, st.integers(2, 30))
def test_exact_lines_recovered(a, b, n):
    f = fit_linear([(t, a + b * t) for t in range(n)])
    assert f.slope == pytest.approx(b, abs=1e-9)
    assert f.intercept == pytest.approx(a, abs=1e-9)


@given(st.lists(finite, min_size=3, max_size=30))
def test_residuals_orthogonal_to_time(values):
    f = fit_linear(list(enumerate(values)))
    t = np.arange(len(values))
    resid = np.array(values) - f.predict(t)
    assert abs(np.dot(resid, t)) <= 1e-6 * max(1.0, np.abs(values).max()) * len(values) ** 2
    assert f.residual_sse >= 0


def test_fit_demand_exponential():
    fit = fit_demand([(t, 100 * 1.01 ** t) for t in range(6)])
    assert not fit.fallback_used
    assert fit.growth_factor == pytest.approx(1.01, abs=1e-9)


def test_fit_demand_linear_fallback():
    fit = fit_demand([(t, 10 + 2 * t) for t in range(6)])
    assert fit.fallback_used
    assert fit.predict(10) == pytest.approx(30)


def test_fit_demand_constant():
    fit = fit_demand([(t, 5.0) for t in range(5)])
    assert fit.predict(7) == pytest.approx(5.0)
    assert fit.residual_sse == pytest.approx(0, abs=1e-20)


def test_fit_demand_non_positive_uses_line():
    fit = fit_demand([(0, 2), (1, 0), (2, -2)])
    assert fit.fallback_used
    assert fit.predict(3) == pytest.approx(-4)
    with pytest.raises(InsufficientData):
        fit_demand([(0, 1), (1, 2)])


@given(st.lists(st.floats(1, 1e4), min_size=3, max_size=15))
def test_selected_branch_has_smaller_sse(values):
    fit = fit_demand(list(enumerate(values)))
    t = np.arange(len(values))
    y = np.array(values)
    lin = fit_linear(list(zip(t, y)))
    exp_sse = float(np.sum((y - fit.base_value * fit.growth_factor ** t) ** 2))
    assert fit.residual_sse == pytest.approx(min(lin.residual_sse, exp_sse))


def test_volatility_linear_series_differenced():
    model = fit_fuel_volatility([3.0 + 0.5 * t for t in range(30)], (1, 1, 1))
    assert model.residual_std < 1e-8


def test_volatility_white_noise():
    rng = np.random.default_rng(1)
    model = fit_fuel_volatility(rng.normal(10, 2.5, 500), (0, 0, 0))
    assert model.residual_std == pytest.approx(2.5, rel=0.15)


def test_volatility_short_series():
    with pytest.raises(InsufficientData):
        fit_fuel_volatility([1, 2, 3, 4, 5])


def test_volatility_agrees_with_statsmodels():
    sm = pytest.importorskip("statsmodels.tsa.arima.model")
    rng = np.random.default_rng(3)
    e = rng.normal(0, 1.0, 400)
    w = np.zeros(400)
    for t in range(1, 400):
        w[t] = 0.2 + 0.5 * w[t - 1] + e[t] + 0.3 * e[t - 1]
    y = 20 + np.cumsum(w)
    ours = fit_fuel_volatility(y, (1, 1, 1))
    ref = sm.ARIMA(y, order=(1, 1, 1), trend="t").fit()
    assert ours.params[1] == pytest.approx(ref.params[1], abs=0.1)
    assert ours.residual_std == pytest.approx(np.sqrt(ref.params[-1]), rel=0.05)


def history(values, start=2000):
    h = History()
    for i, v in enumerate(values):
        h.append(start + i, {Fuel.GAS: v}, v / 2, 100.0 + i)
    return h


def test_window_uses_only_recent_years():
    h = history([50, 40, 30, 20, 10, 1, 2, 3, 4, 5])
    fc = forecast_prices(make_genco(window=4), h, 3)
    # Years 7-10 hold 2, 3, 4, 5: slope 1, so the next year is 6.
    np.testing.assert_allclose(fc.fuel[Fuel.GAS], [6, 7, 8])
    np.testing.assert_array_equal(fc.years, [2010, 2011, 2012])


def test_windows_disagree_on_kinked_series():
    h = history([10, 10, 10, 10, 10, 10, 10, 12, 14, 16])
    short = forecast_prices(make_genco(window=3), h, 1).fuel[Fuel.GAS][0]
    long = forecast_prices(make_genco(window=8), h, 1).fuel[Fuel.GAS][0]
    assert short == pytest.approx(18)
    t = np.arange(8)
    y = np.array([10, 10, 10, 10, 10, 12, 14, 16], dtype=float)
    slope, icpt = np.polyfit(t, y, 1)
    assert long == pytest.approx(icpt + slope * 8)
    assert short != pytest.approx(long)


def test_zero_horizon_and_short_history():
    h = history([1, 2, 3, 4])
    fc = forecast_prices(make_genco(window=3), h, 0)
    assert fc.years.size == 0 and fc.carbon.size == 0
    with pytest.raises(InsufficientData):
        forecast_prices(make_genco(window=5), h, 2)


def test_forecast_is_deterministic():
    h = history([5, 7, 6, 8, 9, 7, 10])
    a = forecast_prices(make_genco(window=5), h, 10)
    b = forecast_prices(make_genco(window=5), h, 10)
    assert a.fuel[Fuel.GAS].tobytes() == b.fuel[Fuel.GAS].tobytes()
    assert a.demand_multiplier.tobytes() == b.demand_multiplier.tobytes()


def test_history_must_be_consecutive():
    h = history([1, 2])
    with pytest.raises(ValueError):
        h.append(2005, {Fuel.GAS: 1}, 0, 1)
