"""Reusable experiment protocols: noisy-truth price validation and runtime scaling."""
from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .domain import ScenarioConfig
from .metrics import mae_rmse, mean_curve, price_duration_curve
from .scenario import _shared_inputs, load_ldc_shape, run_replication

TRUTH_STREAM = 100_000


@dataclass(frozen=True)
class ValidationTrial:
    trial: int
    stochastic_mae: float
    deterministic_mae: float

    @property
    def stochastic_wins(self) -> bool:
        return self.stochastic_mae < self.deterministic_mae


def validation_trial(config: ScenarioConfig, trial: int, replications: int = 40,
                     shared: dict | None = None) -> ValidationTrial:
    """Compare stochastic and deterministic first-year price curves against a
    reference drawn from one independent stochastic world.

    The reference world shares the fleet but has its own discount rates,
    variable costs and fuel purchase prices, so it plays the part of a
    market whose hidden noise the model cannot know.
    """
    shared = _shared_inputs(config) if shared is None else shared
    stoch = replace(config, stochastic_enabled=True, n_years=1)
    det = replace(stoch, stochastic_enabled=False)
    ldc = stoch.initial_ldc

    truth = run_replication(stoch, TRUTH_STREAM + trial, shared)
    reference = price_duration_curve(truth.smp[0], ldc)
    runs = np.stack([run_replication(stoch, trial * replications + r, shared).smp[0] for r in range(replications)])
    stochastic = mean_curve(runs, ldc)
    deterministic = price_duration_curve(run_replication(det, 0, shared).smp[0], ldc)
    return ValidationTrial(trial, mae_rmse(stochastic, reference)[0], mae_rmse(deterministic, reference)[0])


def scaled_config(config: ScenarioConfig, capacity_gw: float, peak_per_gw: float = 650.0) -> ScenarioConfig:
    """Same scenario on a fleet of ``capacity_gw`` with demand scaled alongside."""
    fleet = replace(config.fleet, target_capacity_mw=capacity_gw * 1000.0)
    ldc = load_ldc_shape(None, peak_per_gw * capacity_gw)
    return replace(config, fleet=fleet, initial_ldc=ldc, n_replications=1, stochastic_enabled=False)


def time_run(config: ScenarioConfig, repeats: int = 3) -> float:
    """Best wall time of one replication, excluding the shared table loading."""
    shared = _shared_inputs(config)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        run_replication(config, 0, shared)
        best = min(best, time.perf_counter() - t0)
    return best


def runtime_scaling(config: ScenarioConfig, capacities_gw=(2, 4, 8), repeats: int = 3) -> dict:
    times = [time_run(scaled_config(config, c), repeats) for c in capacities_gw]
    slope = float(np.polyfit(np.log(capacities_gw), np.log(times), 1)[0])
    ratios = [b / a for a, b in zip(times, times[1:])]
    return {"capacity_gw": list(capacities_gw), "seconds": times, "doubling_ratios": ratios, "loglog_slope": slope}
