"""Monte Carlo sweeps: seeding, per-drop execution, aggregation and result files."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .association import IcicMode, NetworkEvaluation, evaluate_network, fifth_percentile_se
from .deployment import DEFAULT_ALTITUDE, NetworkLayout, Region, destroy_mbs, place_hex_grid, sample_ppp
from .estimators import GeneticPlacementOptimizer, HexGridIcicSearch
from .optimizer import GaSettings, IcicGrid, derive_rng
from .radio import PowerModel

logger = logging.getLogger(__name__)

__all__ = [
    "SimulationSettings",
    "Scenario",
    "ResultRecord",
    "TraceRecord",
    "DropResult",
    "CampaignResult",
    "RECORD_COLUMNS",
    "SUMMARY_COLUMNS",
    "draw_layout",
    "run_drop",
    "run_campaign",
    "aggregate",
    "write_results",
    "read_results",
    "write_table",
    "read_table",
]

DEPLOYMENTS = ("hex", "ga")
MAX_REDRAWS = 100


@dataclass(frozen=True)
class SimulationSettings:
    """Drop geometry and radio parameters shared by all scenarios of a run."""

    region: Region = Region(10_000.0, 10_000.0)
    mbs_intensity: float = 4.0  # per km²
    ue_intensity: float = 100.0  # per km²
    power_model: PowerModel = field(default_factory=PowerModel.from_dbm)
    altitude: float = DEFAULT_ALTITUDE
    beta: float = 0.5
    mbs_height: float = 0.0


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    mode: IcicMode
    deployment: str
    n_uabs: int
    destroyed_fraction: float
    drops: int = 100
    master_seed: int = 0
    grid: IcicGrid = field(default_factory=IcicGrid)
    ga: GaSettings = field(default_factory=GaSettings)

    def __post_init__(self):
        object.__setattr__(self, "mode", IcicMode(self.mode))
        object.__setattr__(self, "grid", self.grid.for_mode(self.mode))
        if self.deployment not in DEPLOYMENTS:
            raise ValueError(f"deployment must be one of {DEPLOYMENTS}, got {self.deployment!r}")
        if self.drops < 1:
            raise ValueError("drops must be at least 1")
        if not 0.0 <= self.destroyed_fraction <= 1.0:
            raise ValueError("destroyed_fraction must lie in [0, 1]")
        if self.n_uabs < 1:
            raise ValueError("n_uabs must be at least 1")


@dataclass
class ResultRecord:
    scenario_id: str
    drop: int
    mode: str
    deployment: str
    n_uabs: int
    destroyed_fraction: float
    tau_db: float
    alpha: float
    rho_db: float
    rho_prime_db: float
    se_5pct_bps_hz: float
    n_usf_mue: int
    n_csf_mue: int
    n_usf_uue: int
    n_csf_uue: int
    wall_ms: float = 0.0


@dataclass
class TraceRecord:
    scenario_id: str
    drop: int
    generation: int
    best_se_5pct_bps_hz: float


RECORD_COLUMNS = tuple(f.name for f in dataclasses.fields(ResultRecord))
TRACE_COLUMNS = tuple(f.name for f in dataclasses.fields(TraceRecord))
GROUP_COLUMNS = ("scenario_id", "mode", "deployment", "n_uabs", "destroyed_fraction", "tau_db")
SUMMARY_COLUMNS = GROUP_COLUMNS + ("n", "median", "mean", "p5", "p95")


@dataclass
class DropResult:
    records: list[ResultRecord]
    trace: list[TraceRecord] = field(default_factory=list)


@dataclass
class CampaignResult:
    records: list[ResultRecord]
    traces: list[TraceRecord]


def draw_layout(settings: SimulationSettings, destroyed_fraction: float, master_seed: int,
                drop_index: int) -> NetworkLayout:
    """Base layout (MBSs and UEs, no UABSs) of one drop after MBS destruction.

    The layout depends only on the seed, the drop index and the destruction
    level, so scenarios sharing those see the same scene.
    """
    for attempt in range(MAX_REDRAWS):
        rng = derive_rng(master_seed, drop_index, 0, attempt)
        mbs = sample_ppp(settings.mbs_intensity, settings.region, rng)
        ue = sample_ppp(settings.ue_intensity, settings.region, rng)
        if len(ue) == 0:
            logger.warning("drop %d: no UEs drawn, redrawing (attempt %d)", drop_index, attempt + 1)
            continue
        if settings.mbs_height == 0 and len(mbs):
            # a UE exactly on a macro site has zero link distance
            while True:
                d2 = ((ue[:, None, :] - mbs[None, :, :]) ** 2).sum(axis=2)
                bad = (d2 == 0).any(axis=1)
                if not bad.any():
                    break
                logger.warning("drop %d: redrawing %d collocated UEs", drop_index, int(bad.sum()))
                ue[bad] = rng.uniform(size=(int(bad.sum()), 2)) * [settings.region.width, settings.region.height]
        layout = NetworkLayout(settings.region, mbs=mbs, ue=ue, mbs_height=settings.mbs_height)
        return destroy_mbs(layout, destroyed_fraction, rng)
    raise RuntimeError(f"drop {drop_index}: no UEs after {MAX_REDRAWS} redraws")


def _record(scenario: Scenario, drop: int, params: tuple, ev: NetworkEvaluation, wall_ms: float) -> ResultRecord:
    tau_db, alpha, rho_db, rho_prime_db = (float(p) for p in params)
    return ResultRecord(scenario.scenario_id, drop, scenario.mode.value, scenario.deployment,
                        scenario.n_uabs, scenario.destroyed_fraction, tau_db, alpha, rho_db,
                        rho_prime_db, float(ev.se_5pct), *ev.class_totals(), wall_ms)


def run_drop(scenario: Scenario, drop_index: int, settings: SimulationSettings = SimulationSettings(),
             n_jobs: int = 1) -> DropResult:
    """Build one drop and run the scenario's search on it.

    Hex scenarios yield one record per swept τ (best α, ρ, ρ' at that τ);
    GA scenarios yield the best individual plus its generation trace.
    """
    t0 = time.perf_counter()
    base = draw_layout(settings, scenario.destroyed_fraction, scenario.master_seed, drop_index)
    pm = settings.power_model
    if scenario.deployment == "hex":
        est = HexGridIcicSearch(n_uabs=scenario.n_uabs, mode=scenario.mode.value, grid=scenario.grid,
                                altitude=settings.altitude, beta=settings.beta, power_model=pm).fit(base)
        layout = est.transform(base)
        per_tau = est.search_.best_per_tau()
        evs = []
        for tau in scenario.grid.tau_db:
            row = est.search_.table[per_tau[tau]]
            icic = est.icic_for(row)
            evs.append((row[:4], evaluate_network(layout, icic, pm)))
        wall = (time.perf_counter() - t0) * 1e3
        out = [_record(scenario, drop_index, params, ev, wall) for params, ev in evs]
        return DropResult(out)

    seed = np.random.SeedSequence(scenario.master_seed, spawn_key=(drop_index, 1))
    s = scenario.ga
    est = GeneticPlacementOptimizer(
        n_uabs=scenario.n_uabs, mode=scenario.mode.value, population_size=s.population_size,
        generations=s.generations, crossover_prob=s.crossover_prob, mutation_prob=s.mutation_prob,
        elitism=s.elitism, altitude=settings.altitude, beta=settings.beta, power_model=pm,
        random_state=seed, n_jobs=n_jobs,
    ).fit(base)
    best = est.best_chromosome_
    icic = est.icic_
    ev = est.result_.best_evaluation
    wall = (time.perf_counter() - t0) * 1e3
    rec = _record(scenario, drop_index, (best.tau_db, icic.alpha, best.rho_db, best.rho_prime_db), ev, wall)
    trace = [TraceRecord(scenario.scenario_id, drop_index, g, float(v)) for g, v in enumerate(est.trace_)]
    return DropResult([rec], trace)


def _run_task(args) -> DropResult:
    scenario, drop, settings = args
    return run_drop(scenario, drop, settings)


def run_campaign(scenarios: Sequence[Scenario], settings: SimulationSettings = SimulationSettings(),
                 workers: int = 1) -> CampaignResult:
    """Run every drop of every scenario; output order is independent of ``workers``."""
    tasks = [(sc, d, settings) for sc in scenarios for d in range(sc.drops)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    records = [r for res in results for r in res.records]
    traces = [t for res in results for t in res.trace]
    return CampaignResult(records, traces)


def _nearest_rank(sorted_vals: np.ndarray, q: float) -> float:
    n = sorted_vals.size
    k = max(1, int(np.ceil(round(q * n, 9))))
    return float(sorted_vals[k - 1])


def _group_key(r: ResultRecord) -> tuple:
    # GA records carry an optimized τ, so they group per scenario only
    tau = r.tau_db if r.deployment == "hex" else None
    return (r.scenario_id, r.mode, r.deployment, r.n_uabs, r.destroyed_fraction, tau)


def aggregate(records: Iterable[ResultRecord]) -> list[dict]:
    """Order statistics of the 5pSE per parameter point.

    A parameter point is (scenario, swept τ) for hex sweeps and the
    scenario itself for GA runs. ``p5``/``p95`` are nearest-rank.
    """
    groups: dict[tuple, list[float]] = {}
    for r in records:
        groups.setdefault(_group_key(r), []).append(r.se_5pct_bps_hz)
    if not groups:
        raise ValueError("nothing to aggregate")
    rows = []
    for key in sorted(groups, key=lambda k: tuple((v is None, v) for v in k)):
        vals = np.sort(np.asarray(groups[key], dtype=float))
        rows.append(dict(zip(GROUP_COLUMNS, key)) | {
            "n": int(vals.size),
            "median": float(np.median(vals)),
            "mean": float(np.mean(vals)),
            "p5": fifth_percentile_se(vals),
            "p95": _nearest_rank(vals, 0.95),
        })
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_table(rows: Sequence[dict], path, columns: Sequence[str], fmt: str = "csv") -> Path:
    """Write dict rows as CSV (fixed column order) or JSON text."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            with open(path, "w", newline="") as f:
                w = csv.writer(f, lineterminator="\n")
                w.writerow(columns)
                for r in rows:
                    w.writerow([_fmt(r[c]) for c in columns])
        elif fmt == "json-text":
            with open(path, "w") as f:
                json.dump([{c: r[c] for c in columns} for r in rows], f, indent=1)
                f.write("\n")
        else:
            raise ValueError(f"unknown format {fmt!r}; use 'csv' or 'json-text'")
    except OSError as e:
        raise OSError(f"cannot write results to {path}: {e}") from e
    return path


def read_table(path, fmt: Optional[str] = None) -> list[dict]:
    """Read a file written by :func:`write_table`; CSV cells come back as strings."""
    path = Path(path)
    fmt = fmt or ("json-text" if path.suffix == ".json" else "csv")
    try:
        with open(path, newline="") as f:
            if fmt == "json-text":
                return json.load(f)
            return list(csv.DictReader(f))
    except OSError as e:
        raise OSError(f"cannot read results from {path}: {e}") from e


def write_results(records: Sequence, path, fmt: str = "csv") -> Path:
    rows = [dataclasses.asdict(r) if dataclasses.is_dataclass(r) else r for r in records]
    if records and isinstance(records[0], TraceRecord):
        return write_table(rows, path, TRACE_COLUMNS, fmt)
    return write_table(rows, path, RECORD_COLUMNS, fmt)


_RECORD_TYPES = {f.name: f.type for f in dataclasses.fields(ResultRecord)}
_CASTS = {"str": str, "int": int, "float": float}


def read_results(path, fmt: Optional[str] = None) -> list[ResultRecord]:
    out = []
    for row in read_table(path, fmt):
        out.append(ResultRecord(**{k: _CASTS[_RECORD_TYPES[k]](row[k]) for k in RECORD_COLUMNS}))
    return out


def default_workers() -> int:
    return os.cpu_count() or 1
