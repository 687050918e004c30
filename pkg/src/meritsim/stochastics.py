"""Seeded random sampling for WACC, variable O&M and fuel purchase prices.

Every sampler takes ``enabled``; when it is false the sampler returns its
central value without consuming random numbers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .forecasting import FuelVolatilityModel

WACC_BOUNDS = (0.001, 0.5)


@dataclass
class RngStream:
    seed: int
    stream_id: int = 0
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def normal(self, mean: float = 0.0, std: float = 1.0) -> float:
        return float(self.generator.normal(mean, std))

    def uniform(self, lo: float, hi: float) -> float:
        return float(self.generator.uniform(lo, hi))

    def integers(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi]."""
        return int(self.generator.integers(lo, hi + 1))

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)


def sample_wacc(mean: float, std: float, rng: RngStream, enabled: bool = True) -> float:
    """Gaussian draw, redrawn until it falls inside ``WACC_BOUNDS``."""
    if std < 0:
        raise ValueError("std must be non-negative")
    if not enabled or std == 0:
        return mean
    lo, hi = WACC_BOUNDS
    while True:
        x = rng.normal(mean, std)
        if lo < x < hi:
            return x


def sample_variable_om(mean_vc: float, lo_frac: float, hi_frac: float, rng: RngStream,
                       enabled: bool = True) -> float:
    if not 0.0 <= lo_frac < hi_frac:
        raise ValueError("need 0 <= lo_frac < hi_frac")
    if not enabled:
        return mean_vc
    return rng.uniform(lo_frac * mean_vc, hi_frac * mean_vc)


def sample_fuel_price(base_price: float, volatility_model: FuelVolatilityModel | None, rng: RngStream,
                      enabled: bool = True) -> float:
    """Base price plus a Gaussian shock scaled by the fitted residual spread, floored at 0."""
    if not enabled or volatility_model is None or volatility_model.residual_std == 0:
        return base_price
    return max(0.0, base_price + rng.normal(0.0, volatility_model.residual_std))
