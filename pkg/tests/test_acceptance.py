"""End-to-end acceptance checks. Each test prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear even without -s).
"""
import dataclasses
import filecmp
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import spearmanr

from meritsim.cli import main
from meritsim.costs import LcoeConstraintSet, ParamBound, estimate_params_from_lcoe, lcoe, load_default_cost_table
from meritsim.domain import Bid, Fuel, validate_ldc
from meritsim.experiments import runtime_scaling, validation_trial
from meritsim.investment import npv
from meritsim.market import clear_year
from meritsim.metrics import price_duration_curve
from meritsim.scenario import _shared_inputs, parse_config, run_batch, with_overrides
from meritsim.stochastics import RngStream, sample_variable_om, sample_wacc

from oracles import brute_dispatch, threshold_clear

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} | {name} | {detail}")
        assert ok, f"{name}: {detail}"
    return emit


def test_merit_order_oracle(report):
    rng = np.random.default_rng(20180101)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(1000):
        n_seg = int(rng.integers(1, 4))
        ldc = validate_ldc(sorted(((float(rng.integers(0, 200)), 8760 / n_seg) for _ in range(n_seg)), reverse=True))
        bids = [Bid(f"p{i}", k, float(rng.integers(0, 60)), float(rng.integers(0, 40)))
                for i in range(int(rng.integers(0, 7))) for k in range(n_seg)]
        result = clear_year(bids, ldc, 6000.0)
        for k, seg in enumerate(result.segments):
            smp, dispatch, unmet = threshold_clear([b for b in bids if b.segment_index == k], ldc.demands[k], 6000)
            if (Fraction(seg.smp), brute_dispatch(seg), Fraction(seg.unmet_demand)) != (smp, dispatch, unmet):
                mismatches += 1
    elapsed = time.perf_counter() - t0
    report("merit-order oracle equivalence", mismatches == 0 and elapsed < 5,
           f"{mismatches} mismatching segments over 1000 instances in {elapsed:.2f}s")


def test_npv_closed_form(report):
    examples = [
        (([-100, 110], 0.10), 0.0),
        (([50, 50, 50], 0.0), 150.0),
        (([-1000, 300, 300, 300, 300], 0.05), -1000 + 300 * sum(1.05 ** -t for t in range(1, 5))),
    ]
    worst_example = max(abs(npv(*args) - want) / max(1.0, abs(want)) for args, want in examples)
    rng = np.random.default_rng(7)
    worst_lin = worst_zero = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 40))
        a, b = rng.normal(0, 1e5, n), rng.normal(0, 1e5, n)
        i = float(rng.uniform(-0.5, 0.5))
        # Rounding scales with the discounted magnitudes, which grow like 2**t at i = -0.5.
        scale = max(1.0, npv(np.abs(a) + np.abs(b), i))
        worst_lin = max(worst_lin, abs(npv(a + b, i) - npv(a, i) - npv(b, i)) / scale)
        worst_zero = max(worst_zero, abs(npv(a, 0.0) - a.sum()) / max(1.0, np.abs(a).sum()))
    ok = worst_example <= 1e-6 and worst_lin <= 1e-9 and worst_zero <= 1e-9
    report("NPV closed form", ok,
           f"examples rel err {worst_example:.1e}; linearity {worst_lin:.1e}; i=0 {worst_zero:.1e}; "
           f"[-1000,300x4]@5% = {npv([-1000, 300, 300, 300, 300], 0.05):.4f}")


def test_stochastic_beats_deterministic(report):
    config = parse_config(CONFIGS / "validation_2018.yaml")
    shared = _shared_inputs(config)
    t0 = time.perf_counter()
    trials = [validation_trial(config, t, 40, shared) for t in range(20)]
    elapsed = time.perf_counter() - t0
    wins = sum(t.stochastic_wins for t in trials)
    gain = 1 - np.mean([t.stochastic_mae for t in trials]) / np.mean([t.deterministic_mae for t in trials])
    report("stochastic vs deterministic validation", wins >= 18 and elapsed < 120,
           f"stochastic MAE lower in {wins}/20 trials (mean MAE {100 * gain:.1f}% lower) in {elapsed:.1f}s")


def test_deterministic_degeneracy(report):
    worst = 0.0
    for name, overrides in (("validation_2018", {}), ("carbon_40", {"n_years": 6})):
        config = with_overrides(parse_config(CONFIGS / f"{name}.yaml"), replications=6, deterministic=True)
        config = dataclasses.replace(config, **overrides)
        batch = run_batch(config)
        prices = np.stack([r.smp for r in batch.replications])  # (reps, years, segments)
        worst = max(worst, float(np.abs(prices - prices[0]).max()), float((prices - prices[0]).std(axis=0).max()))
    report("deterministic degeneracy", worst == 0.0,
           f"largest across-replication deviation in any segment price: {worst}")


@pytest.fixture(scope="module")
def carbon_sweep():
    t0 = time.perf_counter()
    means = {}
    for tax in (0, 20, 40, 70):
        batch = run_batch(parse_config(CONFIGS / f"carbon_{tax}.yaml"))
        assert len(batch.replications) == 10
        means[tax] = batch.summary([(2039, 2050)]).ranges[0].low_carbon.mean
    return means, time.perf_counter() - t0


def test_carbon_tax_monotonicity(report, carbon_sweep):
    means, elapsed = carbon_sweep
    rho = spearmanr(list(means), list(means.values())).statistic
    strictly = all(a < b for a, b in zip(list(means.values()), list(means.values())[1:]))
    shown = ", ".join(f"{t}: {m:.1f}%" for t, m in means.items())
    report("carbon-tax monotonicity", rho == 1.0 and strictly and elapsed < 600,
           f"2039-2050 low-carbon means {shown}; rho {rho:.2f}; {elapsed:.0f}s")


def test_forty_pound_magnitude(report, carbon_sweep):
    mean = carbon_sweep[0][40]
    report("40/t tax low-carbon magnitude", 50 <= mean <= 90, f"2039-2050 low-carbon mean {mean:.1f}% (band 50-90)")


def test_runtime_scaling(report):
    result = runtime_scaling(parse_config(CONFIGS / "carbon_40.yaml"), (2, 4, 8), repeats=3)
    ratios, slope = result["doubling_ratios"], result["loglog_slope"]
    ok = all(r <= 3 for r in ratios) and 0.7 <= slope <= 1.5
    times = ", ".join(f"{c} GW {s:.2f}s" for c, s in zip(result["capacity_gw"], result["seconds"]))
    report("linear runtime scaling", ok,
           f"{times}; per-doubling ratios {', '.join(f'{r:.2f}' for r in ratios)}; log-log slope {slope:.2f}")


def test_price_duration_construction(report):
    config = parse_config(CONFIGS / "validation_2018.yaml")
    rep = run_batch(with_overrides(config, replications=1)).replications[0]
    pdc = price_duration_curve(rep.smp[0], config.initial_ldc)
    ok = (len(pdc.prices) == 20 and np.allclose(pdc.widths, 0.05, rtol=0, atol=1e-12)
          and np.all(np.diff(pdc.prices) <= 0) and pdc.fractions[-1] == 1.0)
    report("price-duration construction", ok,
           f"{len(pdc.prices)} steps, widths {pdc.widths.min():.4f}-{pdc.widths.max():.4f}, "
           f"prices {pdc.prices[0]:.1f} down to {pdc.prices[-1]:.1f}")


def test_sampler_statistics(report):
    rng = RngStream(2018)
    wacc = np.array([sample_wacc(0.09, 0.03, rng) for _ in range(10_000)])
    vom = np.array([sample_variable_om(3.0, 0.3, 2.0, rng) for _ in range(10_000)])
    ok = (abs(wacc.mean() - 0.09) <= 0.001 and abs(wacc.std(ddof=1) - 0.03) <= 0.002
          and vom.min() >= 0.9 and vom.max() <= 6.0 and abs(vom.mean() - 3.45) <= 0.05
          and sample_wacc(0.09, 0.0, rng) == 0.09)
    report("sampler statistics", ok,
           f"WACC mean {wacc.mean():.4f} std {wacc.std(ddof=1):.4f}; "
           f"V_C mean {vom.mean():.3f} range [{vom.min():.3f}, {vom.max():.3f}]")


def test_lcoe_inversion(report):
    table = load_default_cost_table()
    rows = [s for s in table.rows if s.construction_cost > 0 and s.fixed_om_cost > 0]
    rng = np.random.default_rng(99)
    worst = 0.0
    out_of_bounds = 0
    for _ in range(100):
        spec = rows[int(rng.integers(len(rows)))]
        cf, rate = float(rng.uniform(0.1, 0.95)), float(rng.uniform(0.02, 0.15))
        truth = dataclasses.replace(spec, construction_cost=spec.construction_cost * rng.uniform(0.5, 1.5),
                                    fixed_om_cost=spec.fixed_om_cost * rng.uniform(0.5, 1.5))
        fuel = 0.0 if spec.plant_type.fuel is Fuel.NONE else float(rng.uniform(0, 40))
        target = lcoe(truth, cf, rate, fuel_cost_per_mwh=fuel)
        bounds = {"construction_cost": ParamBound(0, 2 * spec.construction_cost),
                  "fixed_om_cost": ParamBound(0, 2 * spec.fixed_om_cost)}
        got = estimate_params_from_lcoe(LcoeConstraintSet(spec, target, cf, rate, bounds, fuel_cost_per_mwh=fuel))
        worst = max(worst, abs(lcoe(got, cf, rate, fuel_cost_per_mwh=fuel) - target) / target)
        out_of_bounds += sum(not (b.lower <= getattr(got, f) <= b.upper) for f, b in bounds.items())
    report("LCOE inversion", worst <= 1e-6 and out_of_bounds == 0,
           f"100 instances, worst relative LCOE error {worst:.1e}, {out_of_bounds} bound violations")


def test_determinism(report, tmp_path, capsys):
    for out in ("a", "b"):
        assert main(["run", str(CONFIGS / "carbon_40.yaml"), "--replications", "2",
                     "--out-dir", str(tmp_path / out)]) == 0
    capsys.readouterr()

    def differences(cmp):
        n = len(cmp.diff_files) + len(cmp.left_only) + len(cmp.right_only) + len(cmp.funny_files)
        return n + sum(differences(s) for s in cmp.subdirs.values())

    a, b = tmp_path / "a" / "carbon_40", tmp_path / "b" / "carbon_40"
    files = sorted(p.relative_to(a) for p in a.rglob("*.csv"))
    mismatched = [f for f in files if (a / f).read_bytes() != (b / f).read_bytes()]
    diff = differences(filecmp.dircmp(a, b)) + len(mismatched)
    report("determinism", diff == 0 and len(files) == 5, f"{len(files)} files compared byte for byte, {diff} differ")
