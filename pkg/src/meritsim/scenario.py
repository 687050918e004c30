"""Scenario configuration, Monte-Carlo replication harness and result files."""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import yaml

from .costs import data_path, load_default_availability, load_default_capacity_factors, load_default_cost_table
from .domain import (
    Fuel,
    FleetSettings,
    InvestmentSettings,
    LoadDurationCurve,
    PlantType,
    ScenarioConfig,
    validate_ldc,
)
from .errors import MeritSimError, MissingKey, ParseError, UnknownKey
from .metrics import ScenarioSummary, default_year_ranges, scenario_summary
from .stochastics import RngStream
from .world import fit_default_volatility, init_world, load_registries, run_world

log = logging.getLogger(__name__)

# Allowed keys per section; None marks a leaf whose value is parsed separately.
SCHEMA: dict[str, Any] = {
    "name": None,
    "simulation": {"start_year": None, "n_years": None, "n_replications": None, "seed": None, "stochastic": None},
    "demand": {"growth": None, "peak_mw": None, "shape": None},
    "fuel": {"prices": None, "emission_factors": None},
    "carbon": {"flat": None, "linear": None, "schedule": None},
    "market": {"lost_load_price": None},
    "finance": {"wacc_mean": None, "wacc_std": None, "upfront_capital_fraction": None, "dividend_fraction": None},
    "stochastic": {"vom_lo": None, "vom_hi": None, "arima_order": None},
    "forecasting": {"window_range": None, "history_years": None},
    "fleet": {"registry": None, "companies": None, "target_capacity_mw": None, "scale_cash": None},
    "investment": {"enabled": None, "max_per_year": None, "block_sizes_mw": None, "lookahead_years": None,
                   "candidate_types": None, "freeze_when_cash_negative": None, "max_candidate_mw": None},
    "summary": {"year_ranges": None},
}
REQUIRED = ("simulation.start_year", "simulation.n_years", "demand.growth", "demand.peak_mw",
            "fuel.prices", "carbon", "market.lost_load_price")

DEFAULT_EMISSION_FACTORS = {Fuel.GAS: 0.184, Fuel.COAL: 0.341, Fuel.URANIUM: 0.0}


class _LineLoader(yaml.SafeLoader):
    pass


def _key_lines(text: str) -> dict[str, int]:
    """Map dotted key paths to their 1-based line numbers."""
    lines: dict[str, int] = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}.{k.value}" if prefix else str(k.value)
                lines[path] = k.start_mark.line + 1
                walk(v, path)

    root = yaml.compose(text, Loader=_LineLoader)
    if root is not None:
        walk(root, "")
    return lines


@dataclass
class _Doc:
    data: dict
    lines: dict[str, int]
    source: str

    def where(self, key: str) -> str:
        line = self.lines.get(key)
        return f"{self.source}:{line}" if line else self.source

    def get(self, key: str, default=None, required: bool = False):
        node: Any = self.data
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                if required:
                    raise MissingKey(f"{self.source}: missing required key '{key}'")
                return default
            node = node[part]
        return node

    def fail(self, key: str, msg: str):
        raise ParseError(f"{self.where(key)}: key '{key}': {msg}")


def _check_keys(node: Mapping, schema: Mapping, prefix: str, doc: _Doc) -> None:
    for k, v in node.items():
        path = f"{prefix}.{k}" if prefix else str(k)
        if k not in schema:
            raise UnknownKey(f"{doc.where(path)}: unknown key '{path}'")
        sub = schema[k]
        if sub is not None:
            if not isinstance(v, dict):
                doc.fail(path, "expected a mapping")
            _check_keys(v, sub, path, doc)


def expand_carbon(spec: Mapping, n_years: int) -> tuple[float, ...]:
    """Per-year carbon tax from ``{flat: v}``, ``{linear: [start, end]}`` or ``{schedule: [...]}``."""
    if len(spec) != 1:
        raise ParseError("carbon: give exactly one of flat, linear, schedule")
    kind, value = next(iter(spec.items()))
    if kind == "flat":
        return (float(value),) * n_years
    if kind == "linear":
        if isinstance(value, Mapping):
            start, end = value["start"], value["end"]
        else:
            start, end = value
        if n_years == 1:
            return (float(start),)
        return tuple(float(v) for v in np.linspace(float(start), float(end), n_years))
    if kind == "schedule":
        vals = [float(v) for v in value]
        if not vals:
            raise ParseError("carbon.schedule is empty")
        return tuple(vals[:n_years] + [vals[-1]] * max(0, n_years - len(vals)))
    raise ParseError(f"carbon: unknown schedule kind '{kind}'")


def _fuel_trajectory(value, n_years: int) -> tuple[float, ...]:
    if isinstance(value, (int, float)):
        return (float(value),) * (n_years + 1)
    if isinstance(value, Mapping):
        start = float(value["start"])
        change = float(value.get("annual_change", 0.0))
        return tuple(start * (1.0 + change) ** k for k in range(n_years + 1))
    vals = [float(v) for v in value]
    return tuple(vals[:n_years + 1] + [vals[-1]] * max(0, n_years + 1 - len(vals)))


def load_ldc_shape(path: str | Path | None, peak_mw: float) -> LoadDurationCurve:
    path = data_path("ldc_shape.csv") if path in (None, "default") else path
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return validate_ldc([(peak_mw * float(r["demand_fraction"]), float(r["duration_hours"])) for r in rows])


def parse_config_text(text: str, source: str = "<config>", base_dir: Path | None = None) -> ScenarioConfig:
    try:
        data = yaml.load(text, Loader=_LineLoader)
        lines = _key_lines(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark else source
        raise ParseError(f"{where}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{source}: configuration must be a mapping")
    doc = _Doc(data, lines, source)
    _check_keys(data, SCHEMA, "", doc)
    for key in REQUIRED:
        doc.get(key, required=True)
    base_dir = Path(".") if base_dir is None else base_dir

    def resolve(p):
        if p in (None, "default"):
            return None
        p = Path(p)
        return str(p if p.is_absolute() else base_dir / p)

    try:
        n_years = int(doc.get("simulation.n_years"))
        start_year = int(doc.get("simulation.start_year"))
        carbon = doc.get("carbon")
        if not isinstance(carbon, Mapping):
            doc.fail("carbon", "expected a mapping")
        prices = doc.get("fuel.prices")
        if not isinstance(prices, Mapping):
            doc.fail("fuel.prices", "expected a mapping of fuel to price")
        trajectories = {Fuel(f): _fuel_trajectory(v, n_years) for f, v in prices.items()}
        for f in (Fuel.GAS, Fuel.COAL, Fuel.URANIUM):
            trajectories.setdefault(f, (0.0,) * (n_years + 1))
        ef = dict(DEFAULT_EMISSION_FACTORS)
        ef.update({Fuel(f): float(v) for f, v in (doc.get("fuel.emission_factors") or {}).items()})
        shape = doc.get("demand.shape")
        ldc = load_ldc_shape(resolve(shape) if shape not in (None, "default") else None,
                             float(doc.get("demand.peak_mw")))
        target = doc.get("fleet.target_capacity_mw")
        fleet = FleetSettings(
            registry=resolve(doc.get("fleet.registry")),
            companies=resolve(doc.get("fleet.companies")),
            target_capacity_mw=None if target is None else float(target),
            scale_cash=bool(doc.get("fleet.scale_cash", True)),
        )
        types = doc.get("investment.candidate_types")
        inv_defaults = InvestmentSettings()
        investment = InvestmentSettings(
            enabled=bool(doc.get("investment.enabled", True)),
            max_per_year=int(doc.get("investment.max_per_year", inv_defaults.max_per_year)),
            block_sizes_mw=tuple(float(b) for b in doc.get("investment.block_sizes_mw", ()) or ()),
            lookahead_years=int(doc.get("investment.lookahead_years", inv_defaults.lookahead_years)),
            candidate_types=tuple(PlantType.parse(t) for t in types) if types else inv_defaults.candidate_types,
            freeze_when_cash_negative=bool(doc.get("investment.freeze_when_cash_negative", False)),
            max_candidate_mw=None if doc.get("investment.max_candidate_mw") is None
            else float(doc.get("investment.max_candidate_mw")),
        )
        window = doc.get("forecasting.window_range", [3, 10])
        order = doc.get("stochastic.arima_order", [1, 1, 1])
        cfg = ScenarioConfig(
            name=str(doc.get("name", Path(source).stem)),
            start_year=start_year,
            n_years=n_years,
            demand_growth=float(doc.get("demand.growth")),
            initial_ldc=ldc,
            fuel_price_trajectory=trajectories,
            carbon_tax_schedule=expand_carbon(carbon, n_years),
            emission_factors=ef,
            lost_load_price=float(doc.get("market.lost_load_price")),
            wacc_mean=float(doc.get("finance.wacc_mean", 0.08)),
            wacc_std=float(doc.get("finance.wacc_std", 0.03)),
            upfront_capital_fraction=float(doc.get("finance.upfront_capital_fraction", 0.25)),
            dividend_fraction=float(doc.get("finance.dividend_fraction", 0.0)),
            vom_uniform_lo=float(doc.get("stochastic.vom_lo", 0.3)),
            vom_uniform_hi=float(doc.get("stochastic.vom_hi", 2.0)),
            arima_order=tuple(int(x) for x in order),
            n_replications=int(doc.get("simulation.n_replications", 1)),
            rng_seed=int(doc.get("simulation.seed", 0)),
            stochastic_enabled=bool(doc.get("simulation.stochastic", True)),
            forecast_window_range=(int(window[0]), int(window[1])),
            history_years=int(doc.get("forecasting.history_years", 10)),
            fleet=fleet,
            investment=investment,
        )
    except MeritSimError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"{source}: {exc}") from exc
    except (TypeError, ValueError, KeyError) as exc:
        raise ParseError(f"{source}: {exc}") from exc
    ranges = doc.get("summary.year_ranges")
    if ranges:
        cfg = replace(cfg, summary_year_ranges=tuple(_parse_range(r) for r in ranges))
    return cfg


def _parse_range(r) -> tuple[int, int]:
    if isinstance(r, str):
        a, b = r.split("-")
        return int(a), int(b)
    return int(r[0]), int(r[1])


def parse_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    return parse_config_text(path.read_text(), str(path), path.parent)


def year_ranges(config: ScenarioConfig) -> list[tuple[int, int]]:
    explicit = config.summary_year_ranges
    return list(explicit) if explicit else default_year_ranges(config.start_year, config.end_year)


# --- replication harness --------------------------------------------------------------------


@dataclass
class ReplicationResult:
    index: int
    seed: int
    years: list[int]
    demand: np.ndarray          # (years, segments) MW
    durations: np.ndarray       # (segments,) hours
    smp: np.ndarray             # (years, segments)
    unmet: np.ndarray           # (years, segments)
    dispatch: dict[PlantType, np.ndarray]      # type -> (years, segments) MW
    capacity_mix: dict[int, dict[PlantType, float]]
    carbon_tax: list[float] = field(default_factory=list)


@dataclass
class BatchResult:
    config: ScenarioConfig
    replications: list[ReplicationResult]

    def segment_prices(self, year: int) -> np.ndarray:
        """(replications, segments) clearing prices for one year."""
        return np.stack([r.smp[r.years.index(year)] for r in self.replications])

    def summary(self, ranges: Sequence[tuple[int, int]] | None = None) -> ScenarioSummary:
        ranges = year_ranges(self.config) if ranges is None else ranges
        return scenario_summary((r.capacity_mix for r in self.replications), ranges)


class BatchError(MeritSimError):
    def __init__(self, index: int, seed: int, cause: BaseException):
        super().__init__(f"replication {index} (seed {seed}, stream {index}) failed: {cause!r}")
        self.index, self.seed = index, seed


def _shared_inputs(config: ScenarioConfig) -> dict:
    return {
        "registries": load_registries(config.fleet.registry, config.fleet.companies),
        "cost_table": load_default_cost_table(),
        "availability_table": load_default_availability(),
        "capacity_factors": load_default_capacity_factors(),
        "fuel_volatility": fit_default_volatility(config.arima_order),
    }


def run_replication(config: ScenarioConfig, index: int, shared: dict | None = None) -> ReplicationResult:
    shared = _shared_inputs(config) if shared is None else shared
    rng = RngStream(config.rng_seed, index)
    world = init_world(config, rng=rng, **shared)
    run_world(world)
    recs = world.yearly_results
    n_seg = config.initial_ldc.n_segments
    return ReplicationResult(
        index=index,
        seed=config.rng_seed,
        years=[r.year for r in recs],
        demand=np.array([r.ldc.demands for r in recs]).reshape(len(recs), n_seg),
        durations=np.array(config.initial_ldc.durations),
        smp=np.array([r.clearing.smp() for r in recs]).reshape(len(recs), n_seg),
        unmet=np.array([[s.unmet_demand for s in r.clearing.segments] for r in recs]).reshape(len(recs), n_seg),
        dispatch={t: np.array([r.dispatch_by_type[t] for r in recs]).reshape(len(recs), n_seg) for t in PlantType},
        capacity_mix={r.year: dict(r.capacity_mix) for r in recs},
        carbon_tax=[r.carbon_tax for r in recs],
    )


def _run_one(args):
    config, index, shared = args
    try:
        return run_replication(config, index, shared)
    except Exception as exc:  # noqa: BLE001 - reported with the failing stream
        raise BatchError(index, config.rng_seed, exc) from exc


def run_batch(config: ScenarioConfig, workers: int = 1) -> BatchResult:
    """Run ``n_replications`` independent simulations on distinct random streams."""
    shared = _shared_inputs(config)
    jobs = [(config, i, shared) for i in range(config.n_replications)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reps = list(pool.map(_run_one, jobs))
    else:
        reps = [_run_one(j) for j in jobs]
    log.info("%s: %d replications finished", config.name, len(reps))
    return BatchResult(config, reps)


# --- result files ------------------------------------------------------------------------------

PRICE_COLUMNS = ["year", "segment", "demand_mw", "duration_hours", "smp", "unmet_mw"] + \
    [f"dispatched_{t.value}" for t in PlantType]


def _fmt(x) -> str:
    return repr(float(x))


def write_replication(rep: ReplicationResult, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "prices.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PRICE_COLUMNS)
        for i, year in enumerate(rep.years):
            for k in range(rep.smp.shape[1]):
                w.writerow([year, k, _fmt(rep.demand[i, k]), _fmt(rep.durations[k]), _fmt(rep.smp[i, k]),
                            _fmt(rep.unmet[i, k])] + [_fmt(rep.dispatch[t][i, k]) for t in PlantType])
    with open(directory / "capacity_mix.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["year", "type", "mw"])
        for year in rep.years:
            for t in PlantType:
                w.writerow([year, t.value, _fmt(rep.capacity_mix[year].get(t, 0.0))])


def read_replication(directory: Path, index: int = 0, seed: int = 0) -> ReplicationResult:
    with open(directory / "prices.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    years = sorted({int(r["year"]) for r in rows})
    n_seg = max(int(r["segment"]) for r in rows) + 1
    shape = (len(years), n_seg)
    demand, smp, unmet = np.zeros(shape), np.zeros(shape), np.zeros(shape)
    durations = np.zeros(n_seg)
    dispatch = {t: np.zeros(shape) for t in PlantType}
    yi = {y: i for i, y in enumerate(years)}
    for r in rows:
        i, k = yi[int(r["year"])], int(r["segment"])
        demand[i, k], smp[i, k], unmet[i, k] = float(r["demand_mw"]), float(r["smp"]), float(r["unmet_mw"])
        durations[k] = float(r["duration_hours"])
        for t in PlantType:
            dispatch[t][i, k] = float(r[f"dispatched_{t.value}"])
    mix: dict[int, dict[PlantType, float]] = {y: {} for y in years}
    with open(directory / "capacity_mix.csv", newline="") as fh:
        for r in csv.DictReader(fh):
            mix.setdefault(int(r["year"]), {})[PlantType.parse(r["type"])] = float(r["mw"])
    return ReplicationResult(index, seed, years, demand, durations, smp, unmet, dispatch, mix)


def read_results(scenario_dir: Path) -> list[ReplicationResult]:
    dirs = sorted(p for p in Path(scenario_dir).iterdir() if p.is_dir() and p.name.startswith("replication_"))
    if not dirs:
        raise FileNotFoundError(f"no replication directories under {scenario_dir}")
    return [read_replication(d, i) for i, d in enumerate(dirs)]


SUMMARY_COLUMNS = ["year_range", "observations",
                   "low_carbon_mean", "low_carbon_std", "low_carbon_min", "low_carbon_max",
                   "traditional_mean", "traditional_std", "traditional_min", "traditional_max"]


def write_summary(summary: ScenarioSummary, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for r in summary.ranges:
            lc, tr = r.low_carbon, r.traditional
            w.writerow([f"{r.start_year}-{r.end_year}", r.observations,
                        _fmt(lc.mean), _fmt(lc.std), _fmt(lc.min), _fmt(lc.max),
                        _fmt(tr.mean), _fmt(tr.std), _fmt(tr.min), _fmt(tr.max)])


def write_batch(batch: BatchResult, out_dir: str | Path) -> Path:
    """Emit one directory per scenario: replication CSVs plus the range summary."""
    scenario_dir = Path(out_dir) / batch.config.name
    scenario_dir.mkdir(parents=True, exist_ok=True)
    for rep in batch.replications:
        write_replication(rep, scenario_dir / f"replication_{rep.index:03d}")
    write_summary(batch.summary(), scenario_dir / "summary.csv")
    return scenario_dir


def with_overrides(config: ScenarioConfig, seed: int | None = None, replications: int | None = None,
                   deterministic: bool = False) -> ScenarioConfig:
    changes: dict[str, Any] = {}
    if seed is not None:
        changes["rng_seed"] = seed
    if replications is not None:
        changes["n_replications"] = replications
    if deterministic:
        changes["stochastic_enabled"] = False
    return replace(config, **changes) if changes else config
