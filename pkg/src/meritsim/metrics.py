"""Price-duration curves, error metrics, outlier screening and mix statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .domain import ClearingResult, LoadDurationCurve, PlantType
from .errors import GridMismatch

LOW_CARBON = frozenset({PlantType.PV, PlantType.ONSHORE_WIND, PlantType.OFFSHORE_WIND})
TRADITIONAL = frozenset({PlantType.CCGT, PlantType.OCGT, PlantType.RECIP_ENGINE, PlantType.COAL, PlantType.NUCLEAR})


@dataclass(frozen=True)
class PriceDurationCurve:
    """Prices sorted high to low; ``fractions[k]`` is the cumulative share of
    the year at the right edge of step ``k``."""

    prices: np.ndarray
    fractions: np.ndarray

    def __post_init__(self):
        p, f = np.asarray(self.prices, dtype=float), np.asarray(self.fractions, dtype=float)
        if p.shape != f.shape or p.ndim != 1:
            raise ValueError("prices and fractions must be 1-d and aligned")
        if np.any(np.diff(p) > 0):
            raise ValueError("prices must be non-increasing")
        if np.any(f <= 0) or np.any(f > 1 + 1e-12) or np.any(np.diff(f) <= 0):
            raise ValueError("fractions must increase within (0, 1]")
        object.__setattr__(self, "prices", p)
        object.__setattr__(self, "fractions", f)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(np.concatenate([[0.0], self.fractions]))

    @property
    def midpoints(self) -> np.ndarray:
        return self.fractions - self.widths / 2

    def value_at(self, fraction) -> np.ndarray:
        """Step-function price at cumulative duration ``fraction``."""
        idx = np.searchsorted(self.fractions, np.asarray(fraction, dtype=float), side="left")
        if np.any(idx >= len(self.prices)):
            raise GridMismatch("fraction beyond the end of the curve")
        return self.prices[idx]

    def mean_price(self) -> float:
        return float(np.dot(self.prices, self.widths))


def price_duration_curve(clearing: ClearingResult | Sequence[float], ldc: LoadDurationCurve) -> PriceDurationCurve:
    """Segment prices ordered high to low against their cumulative share of the year."""
    smp = clearing.smp() if isinstance(clearing, ClearingResult) else np.asarray(clearing, dtype=float)
    durations = ldc.duration_array()
    if len(smp) != len(durations):
        raise ValueError("one price per segment required")
    order = np.argsort(-smp, kind="stable")
    fractions = np.cumsum(durations[order]) / durations.sum()
    fractions[-1] = 1.0
    return PriceDurationCurve(smp[order], fractions)


def remove_peak_outliers(curves: np.ndarray) -> np.ndarray:
    """Blank out (NaN) peak-segment prices above median + 3 IQR.

    ``curves`` is (replications, segments) in demand order, peak first.
    Other segments pass through untouched.
    """
    curves = np.array(curves, dtype=float, copy=True)
    if curves.shape[0] < 4:
        raise ValueError("outlier screening needs at least four replications")
    peak = curves[:, 0]
    q1, med, q3 = np.percentile(peak, [25, 50, 75])
    limit = med + 3.0 * (q3 - q1)
    curves[peak > limit, 0] = np.nan
    return curves


def mean_curve(curves: np.ndarray, ldc: LoadDurationCurve, screen_outliers: bool = True) -> PriceDurationCurve:
    """Average segment prices across replications, then order into a duration curve."""
    curves = np.asarray(curves, dtype=float)
    if screen_outliers and curves.shape[0] >= 4:
        curves = remove_peak_outliers(curves)
    return price_duration_curve(np.nanmean(curves, axis=0), ldc)


def resample(reference: PriceDurationCurve, grid: PriceDurationCurve) -> np.ndarray:
    """Reference prices at the midpoints of ``grid``'s steps."""
    if reference.fractions[-1] < grid.midpoints[-1]:
        raise GridMismatch("reference curve does not cover the model's duration grid")
    return reference.value_at(grid.midpoints)


def mae_rmse(model_curve, reference_curve) -> tuple[float, float]:
    """Mean absolute and root-mean-square error of model against reference.

    Duration curves are compared on the model's grid; plain arrays must
    already be aligned.
    """
    if isinstance(model_curve, PriceDurationCurve):
        model = model_curve.prices
        if isinstance(reference_curve, PriceDurationCurve):
            ref = resample(reference_curve, model_curve)
        else:
            ref = np.asarray(reference_curve, dtype=float)
    else:
        model = np.asarray(model_curve, dtype=float)
        ref = reference_curve.prices if isinstance(reference_curve, PriceDurationCurve) else np.asarray(reference_curve, dtype=float)
    if model.shape != ref.shape:
        raise GridMismatch(f"model has {model.shape} points, reference {ref.shape}")
    diff = model - ref
    return float(np.mean(np.abs(diff))), float(math.sqrt(np.mean(diff ** 2)))


@dataclass(frozen=True)
class ShareStats:
    mean: float
    std: float
    min: float
    max: float

    @classmethod
    def of(cls, values: Sequence[float]) -> "ShareStats":
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            return cls(math.nan, math.nan, math.nan, math.nan)
        return cls(float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0, float(v.min()), float(v.max()))


@dataclass(frozen=True)
class RangeSummary:
    start_year: int
    end_year: int
    low_carbon: ShareStats
    traditional: ShareStats
    observations: int


@dataclass(frozen=True)
class ScenarioSummary:
    ranges: tuple[RangeSummary, ...]


def low_carbon_share(mix: Mapping[PlantType, float]) -> float | None:
    """Low-carbon percentage of grouped operating capacity; hydro is in neither group."""
    lc = math.fsum(v for t, v in mix.items() if t in LOW_CARBON)
    trad = math.fsum(v for t, v in mix.items() if t in TRADITIONAL)
    if lc + trad <= 0:
        return None
    return 100.0 * lc / (lc + trad)


def scenario_summary(replications: Iterable[Mapping[int, Mapping[PlantType, float]]],
                     year_ranges: Sequence[tuple[int, int]]) -> ScenarioSummary:
    """Share statistics pooled over replications and the years of each
    (inclusive) range. ``replications`` yields year -> capacity mix maps."""
    reps = list(replications)
    out = []
    for start, end in year_ranges:
        shares = []
        for mixes in reps:
            for year in range(start, end + 1):
                if year in mixes:
                    s = low_carbon_share(mixes[year])
                    if s is not None:
                        shares.append(s)
        trad = [100.0 - s for s in shares]
        out.append(RangeSummary(start, end, ShareStats.of(shares), ShareStats.of(trad), len(shares)))
    return ScenarioSummary(tuple(out))


def default_year_ranges(start_year: int, end_year: int, width: int = 10) -> list[tuple[int, int]]:
    """Decade-wide ranges from the year after start, sharing endpoints; the
    last range runs to ``end_year``."""
    ranges = []
    a = start_year + 1
    while a + width < end_year:
        ranges.append((a, a + width))
        a += width
    if a < end_year or not ranges:
        if ranges and end_year - a < width // 2:
            ranges[-1] = (ranges[-1][0], end_year)
        else:
            ranges.append((a, end_year))
    return ranges
