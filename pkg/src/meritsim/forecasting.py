"""Forecast models fitted on each GenCo's own slice of history."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import least_squares

from .domain import Fuel, GenCo
from .errors import InsufficientData

Series = Sequence[tuple[float, float]]


def _xy(series: Iterable[tuple[float, float]]) -> tuple[np.ndarray, np.ndarray]:
    pts = list(series)
    t = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    return t, y


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    residual_sse: float

    def predict(self, t):
        return self.intercept + self.slope * np.asarray(t, dtype=float)


def fit_linear(series: Series) -> LinearFit:
    """Ordinary least squares of value on time."""
    t, y = _xy(series)
    if len(t) < 2:
        raise InsufficientData("a line needs at least two points")
    tm, ym = t.mean(), y.mean()
    sxx = float(np.sum((t - tm) ** 2))
    if sxx == 0:
        raise InsufficientData("all observations share one time value")
    slope = float(np.sum((t - tm) * (y - ym)) / sxx)
    intercept = float(ym - slope * tm)
    resid = y - (intercept + slope * t)
    return LinearFit(slope, intercept, float(np.sum(resid ** 2)))


@dataclass(frozen=True)
class ExponentialFit:
    """``a * b**t``, or a linear model when ``fallback_used`` is set."""

    base_value: float
    growth_factor: float
    residual_sse: float
    fallback_used: bool = False
    linear: LinearFit | None = None

    def __post_init__(self):
        if not self.growth_factor > 0:
            raise ValueError("growth factor must be positive")

    def predict(self, t):
        t = np.asarray(t, dtype=float)
        if self.fallback_used:
            return self.linear.predict(t)
        return self.base_value * self.growth_factor ** t


def fit_demand(series: Series) -> ExponentialFit:
    """Compound-growth fit by OLS on log values, replaced by a straight line
    whenever the line has the smaller squared error in the original units.

    Non-positive values rule out the log fit, so the line is used directly.
    """
    t, y = _xy(series)
    if len(t) < 3:
        raise InsufficientData("demand fitting needs at least three points")
    lin = fit_linear(zip(t, y))
    if np.any(y <= 0):
        return ExponentialFit(1.0, 1.0, lin.residual_sse, True, lin)
    log_fit = fit_linear(zip(t, np.log(y)))
    a, b = math.exp(log_fit.intercept), math.exp(log_fit.slope)
    exp_sse = float(np.sum((y - a * b ** t) ** 2))
    if lin.residual_sse < exp_sse:
        return ExponentialFit(a, b, lin.residual_sse, True, lin)
    return ExponentialFit(a, b, exp_sse, False, lin)


@dataclass(frozen=True)
class FuelVolatilityModel:
    arima_order: tuple[int, int, int]
    residual_std: float
    params: tuple[float, ...] = ()
    fallback_used: bool = False

    def __post_init__(self):
        if self.residual_std < 0:
            raise ValueError("residual std must be non-negative")


def _arma_residuals(params: np.ndarray, w: np.ndarray, p: int, q: int) -> np.ndarray:
    c, phi, theta = params[0], params[1:1 + p], params[1 + p:1 + p + q]
    n = len(w)
    e = np.zeros(n)
    for t in range(p, n):
        pred = c
        for i in range(p):
            pred += phi[i] * w[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= p:
                pred += theta[j] * e[t - 1 - j]
        e[t] = w[t] - pred
    return e[p:]


def fit_fuel_volatility(series: Sequence[float], order: tuple[int, int, int] = (1, 1, 1)) -> FuelVolatilityModel:
    """ARIMA(p, d, q) by conditional least squares; keeps the residual spread.

    When the optimiser fails the model falls back to a random walk and
    reports the spread of first differences instead.
    """
    y = np.asarray(series, dtype=float)
    p, d, q = order
    if len(y) < 10:
        raise InsufficientData("volatility fitting needs at least ten observations")
    w = np.diff(y, n=d) if d else y.copy()
    if len(w) <= p + q + 1:
        raise InsufficientData("series too short for the requested order")
    x0 = np.concatenate([[w.mean()], np.zeros(p + q)])
    lo = np.concatenate([[-np.inf], np.full(p + q, -0.99)])
    hi = np.concatenate([[np.inf], np.full(p + q, 0.99)])
    try:
        res = least_squares(_arma_residuals, x0, bounds=(lo, hi), args=(w, p, q), method="trf")
        ok = res.success and np.all(np.isfinite(res.fun))
    except (ValueError, FloatingPointError):
        ok = False
    if not ok:
        diffs = np.diff(y)
        return FuelVolatilityModel(order, float(np.std(diffs, ddof=1)), (), True)
    resid = res.fun
    std = float(np.std(resid, ddof=1)) if len(resid) > 1 else 0.0
    return FuelVolatilityModel(order, std, tuple(float(v) for v in res.x))


@dataclass
class History:
    """Realised yearly exogenous data, oldest first."""

    years: list[int] = field(default_factory=list)
    fuel: dict[Fuel, list[float]] = field(default_factory=dict)
    carbon: list[float] = field(default_factory=list)
    demand: list[float] = field(default_factory=list)
    smp: list[tuple[float, ...]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.years)

    def append(self, year: int, fuel: Mapping[Fuel, float], carbon: float, demand: float,
               smp: Sequence[float] = ()) -> None:
        if self.years and year != self.years[-1] + 1:
            raise ValueError(f"history year {year} does not follow {self.years[-1]}")
        self.years.append(year)
        for f, v in fuel.items():
            self.fuel.setdefault(f, []).append(float(v))
        self.carbon.append(float(carbon))
        self.demand.append(float(demand))
        self.smp.append(tuple(float(s) for s in smp))


@dataclass(frozen=True)
class Forecast:
    years: np.ndarray
    fuel: dict[Fuel, np.ndarray]
    carbon: np.ndarray
    demand_multiplier: np.ndarray


def forecast_prices(genco: GenCo, history: History, horizon: int,
                    first_year: int | None = None, base_year: int | None = None) -> Forecast:
    """Fuel, carbon and demand trajectories from the GenCo's last ``forecast_window`` years.

    Trajectories cover ``horizon`` years from ``first_year`` (default: the
    year after the last observation). Demand is returned as a multiplier on
    the fitted level at ``base_year`` (default: last observed year).
    """
    window = genco.forecast_window
    if len(history) < window:
        raise InsufficientData(f"history has {len(history)} years, window needs {window}")
    last = history.years[-1]
    first_year = last + 1 if first_year is None else first_year
    base_year = last if base_year is None else base_year
    years = np.arange(first_year, first_year + horizon)
    if horizon <= 0:
        return Forecast(years, {f: np.zeros(0) for f in history.fuel}, np.zeros(0), np.zeros(0))
    t_hist = np.asarray(history.years[-window:], dtype=float) - last
    t_fut = years - last

    fuel = {}
    for f, values in history.fuel.items():
        fit = fit_linear(zip(t_hist, values[-window:]))
        fuel[f] = np.maximum(fit.predict(t_fut), 0.0)
    carbon_fit = fit_linear(zip(t_hist, history.carbon[-window:]))
    carbon = np.maximum(carbon_fit.predict(t_fut), 0.0)

    demand_hist = history.demand[-window:]
    if window >= 3:
        dfit = fit_demand(zip(t_hist, demand_hist))
    else:
        lin = fit_linear(zip(t_hist, demand_hist))
        dfit = ExponentialFit(1.0, 1.0, lin.residual_sse, True, lin)
    base = float(dfit.predict(base_year - last))
    level = np.asarray(dfit.predict(t_fut), dtype=float)
    if base > 0:
        mult = np.maximum(level / base, 0.0)
    else:
        mult = np.ones_like(level)
    return Forecast(years, fuel, carbon, mult)
