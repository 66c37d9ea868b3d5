"""Run configuration: flat ``dotted.key = value`` text files.

Values are JSON literals (numbers, quoted strings, lists). Lines starting
with ``#`` are comments. Scenarios live under ``scenario.<id>.<field>``::

    region.width_m = 5000
    grid.tau_db = [0, 6, 12]
    scenario.hex-feicic.mode = "feicic"
    scenario.hex-feicic.deployment = "hex"
    scenario.hex-feicic.n_uabs = 16
    scenario.hex-feicic.destroyed_fraction = 0.5

Precedence, lowest first: built-in defaults, preset, config file,
environment (``UABS_HETNET_*``), explicit overrides (command-line flags).
"""

from __future__ import annotations

import json
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Optional

from .association import IcicMode
from .campaign import Scenario, SimulationSettings
from .deployment import Region
from .optimizer import (ALPHA_RANGE, RHO_DB_RANGE, RHO_PRIME_DB_RANGE, TAU_DB_RANGE, GaSettings,
                        IcicGrid)
from .radio import PowerModel

__all__ = ["ConfigError", "RunConfig", "parse_config", "PRESETS", "ENV_PREFIX", "env_overrides"]

ENV_PREFIX = "UABS_HETNET_"
FORMATS = ("csv", "json-text")
VERBOSITY = ("debug", "info", "warning", "error")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _num(lo=None, hi=None, lo_open=False, integer=False):
    def check(key, v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(key, f"expected a number, got {v!r}")
        if integer and (not float(v).is_integer()):
            raise ConfigError(key, f"expected an integer, got {v!r}")
        if isinstance(v, float) and not math.isfinite(v):
            raise ConfigError(key, f"must be finite, got {v!r}")
        if lo is not None and (v <= lo if lo_open else v < lo):
            raise ConfigError(key, f"must be {'>' if lo_open else '>='} {lo}, got {v!r}")
        if hi is not None and v > hi:
            raise ConfigError(key, f"must be <= {hi}, got {v!r}")
        return int(v) if integer else float(v)
    return check


def _num_list(lo, hi):
    item = _num(lo, hi)

    def check(key, v):
        if not isinstance(v, list) or not v:
            raise ConfigError(key, f"expected a non-empty list of numbers, got {v!r}")
        return [item(key, x) for x in v]
    return check


def _choice(options):
    def check(key, v):
        if v not in options:
            raise ConfigError(key, f"expected one of {list(options)}, got {v!r}")
        return v
    return check


def _string(key, v):
    if not isinstance(v, str):
        raise ConfigError(key, f"expected a string, got {v!r}")
    return v


_DEFAULT_GRID = IcicGrid()

# key -> (default, validator)
SCHEMA: dict[str, tuple[Any, Callable]] = {
    "region.width_m": (10_000.0, _num(0, lo_open=True)),
    "region.height_m": (10_000.0, _num(0, lo_open=True)),
    "intensity.mbs_per_km2": (4.0, _num(0)),
    "intensity.ue_per_km2": (100.0, _num(0, lo_open=True)),
    "power.mbs_dbm": (46.0, _num()),
    "power.uabs_dbm": (30.0, _num()),
    "power.k_mbs": (1.0, _num(0, 1, lo_open=True)),
    "power.k_uabs": (1.0, _num(0, 1, lo_open=True)),
    "power.pathloss_exponent": (4.0, _num(2)),
    "power.sir_cap": (1e9, _num(0, lo_open=True)),
    "geometry.uabs_altitude_m": (121.92, _num(0, lo_open=True)),
    "geometry.mbs_height_m": (0.0, _num(0)),
    "icic.beta": (0.5, _num(0, 1, lo_open=True)),
    "grid.tau_db": (list(_DEFAULT_GRID.tau_db), _num_list(*TAU_DB_RANGE)),
    "grid.alpha": (list(_DEFAULT_GRID.alpha), _num_list(*ALPHA_RANGE)),
    "grid.rho_db": (list(_DEFAULT_GRID.rho_db), _num_list(*RHO_DB_RANGE)),
    "grid.rho_prime_db": (list(_DEFAULT_GRID.rho_prime_db), _num_list(*RHO_PRIME_DB_RANGE)),
    "ga.population_size": (60, _num(2, integer=True)),
    "ga.generations": (100, _num(0, integer=True)),
    "ga.crossover_prob": (0.7, _num(0, 1)),
    "ga.mutation_prob": (0.1, _num(0, 1)),
    "ga.elitism": (1, _num(0, integer=True)),
    "run.seed": (0, _num(0, 2 ** 64 - 1, integer=True)),
    "run.drops": (100, _num(1, integer=True)),
    "run.threads": (1, _num(1, integer=True)),
    "run.format": ("csv", _choice(FORMATS)),
    "run.out_dir": ("results", _string),
    "run.verbosity": ("info", _choice(VERBOSITY)),
}

SCENARIO_FIELDS: dict[str, tuple[Any, Callable]] = {
    "mode": (None, _choice([m.value for m in IcicMode])),
    "deployment": (None, _choice(["hex", "ga"])),
    "n_uabs": (None, _num(1, integer=True)),
    "destroyed_fraction": (None, _num(0, 1)),
}

_ID_RE = re.compile(r"^[A-Za-z0-9_-]+$")


def _scenario_block(mode, deployment, n_uabs, frac):
    sid = f"{deployment}-{mode}-d{round(frac * 1000):d}-n{n_uabs}"
    return {f"scenario.{sid}.mode": mode, f"scenario.{sid}.deployment": deployment,
            f"scenario.{sid}.n_uabs": n_uabs, f"scenario.{sid}.destroyed_fraction": frac}


def _preset(*blocks, **extra):
    out: dict[str, Any] = {}
    for b in blocks:
        out.update(b)
    out.update(extra)
    return out


PRESETS: dict[str, dict[str, Any]] = {
    "fig4-hex-sweep": _preset(*(_scenario_block(m, "hex", 16, f)
                                for m in ("none", "eicic", "feicic") for f in (0.5, 0.975))),
    "fig5-ga": _preset(*(_scenario_block(m, "ga", 16, f)
                         for m in ("eicic", "feicic") for f in (0.5, 0.975))),
    "fig6-compare": _preset(*(_scenario_block(m, d, n, f)
                              for d in ("hex", "ga") for m in ("eicic", "feicic")
                              for f in (0.5, 0.975) for n in (8, 16, 32))),
    "small": _preset(
        _scenario_block("feicic", "hex", 7, 0.5),
        _scenario_block("feicic", "ga", 7, 0.5),
        **{"region.width_m": 5000.0, "region.height_m": 5000.0, "run.drops": 2,
           "ga.population_size": 20, "ga.generations": 10},
    ),
}


def _flatten_scenarios(scenarios: Mapping[str, Mapping[str, Any]]) -> dict[str, Any]:
    return {f"scenario.{sid}.{k}": v for sid, fields in scenarios.items() for k, v in fields.items()}


@dataclass
class RunConfig:
    values: dict[str, Any] = field(default_factory=lambda: {k: d for k, (d, _) in SCHEMA.items()})
    scenarios: dict[str, dict[str, Any]] = field(default_factory=dict)

    def __getitem__(self, key: str):
        return self.values[key]

    def flat(self) -> dict[str, Any]:
        return dict(self.values) | _flatten_scenarios(self.scenarios)

    def to_text(self) -> str:
        return "".join(f"{k} = {json.dumps(v)}\n" for k, v in self.flat().items())

    def settings(self) -> SimulationSettings:
        v = self.values
        pm = PowerModel.from_dbm(v["power.mbs_dbm"], v["power.uabs_dbm"], k_mbs=v["power.k_mbs"],
                                 k_uabs=v["power.k_uabs"], delta=v["power.pathloss_exponent"],
                                 sir_cap=v["power.sir_cap"])
        return SimulationSettings(
            region=Region(v["region.width_m"], v["region.height_m"]),
            mbs_intensity=v["intensity.mbs_per_km2"], ue_intensity=v["intensity.ue_per_km2"],
            power_model=pm, altitude=v["geometry.uabs_altitude_m"], beta=v["icic.beta"],
            mbs_height=v["geometry.mbs_height_m"],
        )

    def grid(self) -> IcicGrid:
        v = self.values
        return IcicGrid(tuple(v["grid.tau_db"]), tuple(v["grid.alpha"]),
                        tuple(v["grid.rho_db"]), tuple(v["grid.rho_prime_db"]))

    def ga_settings(self) -> GaSettings:
        v = self.values
        try:
            return GaSettings(v["ga.population_size"], v["ga.generations"], v["ga.crossover_prob"],
                              v["ga.mutation_prob"], v["ga.elitism"])
        except ValueError as e:
            raise ConfigError("ga.elitism", str(e)) from e

    def scenario_list(self) -> list[Scenario]:
        grid, ga = self.grid(), self.ga_settings()
        out = []
        for sid, f in self.scenarios.items():
            out.append(Scenario(sid, IcicMode(f["mode"]), f["deployment"], f["n_uabs"],
                                f["destroyed_fraction"], drops=self["run.drops"],
                                master_seed=self["run.seed"], grid=grid, ga=ga))
        return out


def parse_text(text: str, source: str = "<config>") -> dict[str, Any]:
    """Raw ``key -> value`` pairs from config text (no validation)."""
    out: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(key or f"{source}:{lineno}", f"expected 'key = value' at {source}:{lineno}")
        try:
            out[key] = json.loads(raw.strip())
        except json.JSONDecodeError as e:
            raise ConfigError(key, f"unparseable value {raw.strip()!r} ({e.msg})") from e
    return out


def _apply(cfg: RunConfig, raw: Mapping[str, Any]) -> None:
    for key, value in raw.items():
        if key.startswith("scenario."):
            parts = key.split(".")
            if len(parts) != 3 or not _ID_RE.match(parts[1]) or parts[2] not in SCENARIO_FIELDS:
                raise ConfigError(key, "scenario keys look like scenario.<id>.<"
                                  + "|".join(SCENARIO_FIELDS) + ">")
            cfg.scenarios.setdefault(parts[1], {})[parts[2]] = SCENARIO_FIELDS[parts[2]][1](key, value)
        elif key in SCHEMA:
            cfg.values[key] = SCHEMA[key][1](key, value)
        else:
            raise ConfigError(key, "unknown key")


def _check(cfg: RunConfig) -> None:
    for sid, fields in cfg.scenarios.items():
        for name in SCENARIO_FIELDS:
            if name not in fields:
                raise ConfigError(f"scenario.{sid}.{name}", "missing")
    if cfg["ga.elitism"] >= cfg["ga.population_size"]:
        raise ConfigError("ga.elitism", "must be smaller than ga.population_size")


_ENV_KEYS = {
    "SEED": "run.seed",
    "DROPS": "run.drops",
    "THREADS": "run.threads",
    "OUT": "run.out_dir",
    "FORMAT": "run.format",
}


def env_overrides(environ: Optional[Mapping[str, str]] = None) -> dict[str, Any]:
    """Overrides from ``UABS_HETNET_{SEED,DROPS,THREADS,OUT,FORMAT}``."""
    environ = os.environ if environ is None else environ
    out: dict[str, Any] = {}
    for name, key in _ENV_KEYS.items():
        raw = environ.get(ENV_PREFIX + name)
        if raw is None:
            continue
        if key in ("run.out_dir", "run.format"):
            out[key] = raw
        else:
            try:
                out[key] = int(raw)
            except ValueError:
                raise ConfigError(ENV_PREFIX + name, f"expected an integer, got {raw!r}") from None
    return out


def parse_config(path=None, overrides: Optional[Mapping[str, Any]] = None, preset: Optional[str] = None,
                 environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Build a validated RunConfig.

    Args:
        path: config file, or None for defaults only.
        overrides: dotted keys from command-line flags; these win.
        preset: name from :data:`PRESETS`.
        environ: mapping used for ``UABS_HETNET_*`` lookups (default
            ``os.environ``).
    """
    cfg = RunConfig()
    if preset:
        if preset not in PRESETS:
            raise ConfigError("preset", f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        _apply(cfg, PRESETS[preset])
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError("config", f"file not found: {path}")
        _apply(cfg, parse_text(path.read_text(), str(path)))
    _apply(cfg, env_overrides(environ))
    if overrides:
        _apply(cfg, overrides)
    _check(cfg)
    return cfg
