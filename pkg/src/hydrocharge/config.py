"""Scenario configuration: nested frozen dataclasses loaded from YAML.

Every field has a default, so an empty document yields the reference cost
constants and plant parameters on a small synthetic city.
Loading errors name the offending field path, e.g. ``stations.piles``.
"""
from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import yaml

from .ev_cost import CostConstants
from .renewables import HydrogenChainParams, PvParams, WindParams
from .station import ChargerSpec

# relative request intensity per hour of day
DEFAULT_PROFILE = (
    0.6, 0.5, 0.4, 0.3, 0.3, 0.4, 0.7, 1.0, 1.2, 1.2, 1.1, 1.2,
    1.4, 1.3, 1.1, 1.0, 1.0, 1.1, 1.2, 1.2, 1.1, 1.0, 0.9, 0.8,
)

# CNY/kWh by hour of day: valley overnight, two peaks
DEFAULT_TOU_HOURLY = (
    0.31, 0.31, 0.31, 0.31, 0.31, 0.31, 0.68, 0.68, 1.08, 1.08, 1.08, 0.68,
    0.68, 1.08, 1.08, 0.68, 0.68, 0.68, 1.08, 1.08, 1.08, 0.68, 0.31, 0.31,
)


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path or '<root>'}: {message}")
        self.path = path


@dataclass(frozen=True)
class GridSpec:
    rows: int = 5
    cols: int = 5
    spacing: float = 3.0  # km


@dataclass(frozen=True)
class NetworkConfig:
    """Either an explicit node/arc list or a rectangular grid."""

    grid: Optional[GridSpec] = field(default_factory=GridSpec)
    nodes: Optional[tuple] = None
    arcs: Optional[tuple] = None
    fcs_nodes: tuple = (6, 8, 12, 16, 18)
    hps_nodes: tuple = (2, 22)


@dataclass(frozen=True)
class FleetConfig:
    n_evs: int = 200
    capacity: float = 75.0  # kWh
    speed: float = 60.0  # km/h


@dataclass(frozen=True)
class RequestConfig:
    daily_requests: float = 300.0  # expected charging requests per day
    profile: tuple = DEFAULT_PROFILE
    q_prob: float = 0.5  # chance a passenger is on board
    soc_min: float = 0.1
    soc_max: float = 0.4
    min_gap: int = 8  # steps between two requests of the same EV


@dataclass(frozen=True)
class StationConfig:
    piles: Union[int, tuple] = 5
    base_load: float = 200.0  # kW
    maintenance: float = 0.018  # CNY/kW
    demand_prior: float = 100.0  # kWh per step
    ewma_alpha: float = 0.5
    ewma_window: int = 4
    steps_per_day: int = 96


@dataclass(frozen=True)
class HpsConfig:
    wind: WindParams = field(default_factory=WindParams)
    pv: PvParams = field(default_factory=PvParams)
    chain: HydrogenChainParams = field(default_factory=HydrogenChainParams)
    maint_wind: float = 0.018  # CNY/kW
    maint_pv: float = 0.018
    delivery: float = 0.04  # CNY/kW
    tanker_speed: float = 48.0  # km/h
    mean_wind: float = 8.0  # m/s, diurnal generator
    peak_radiation: float = 900.0  # W/m^2, diurnal generator
    wind_trace: Optional[tuple] = None  # per HPS, per step; overrides the generator
    solar_trace: Optional[tuple] = None


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 2.0  # CNY
    max_iter: int = 50
    init: str = "vertices"  # vertices | zero | random
    rerequest: bool = True  # unserved EVs ask again next step


@dataclass(frozen=True)
class ScenarioConfig:
    T: int = 96
    delta: float = 0.25  # h
    network: NetworkConfig = field(default_factory=NetworkConfig)
    fleet: FleetConfig = field(default_factory=FleetConfig)
    requests: RequestConfig = field(default_factory=RequestConfig)
    stations: StationConfig = field(default_factory=StationConfig)
    hps: HpsConfig = field(default_factory=HpsConfig)
    costs: CostConstants = field(default_factory=CostConstants)
    solver: SolverConfig = field(default_factory=SolverConfig)
    tou: Optional[tuple] = None  # CNY/kWh per step; default expands the hourly table

    def __post_init__(self):
        validate(self)


def _fail(path, message):
    raise ConfigError(path, message)


def validate(cfg: ScenarioConfig) -> None:
    if cfg.T <= 0:
        _fail("T", "must be positive")
    if cfg.delta <= 0:
        _fail("delta", "must be positive")
    if cfg.tou is not None:
        if len(cfg.tou) < cfg.T:
            _fail("tou", f"needs at least {cfg.T} entries, got {len(cfg.tou)}")
        if any(p < 0 for p in cfg.tou):
            _fail("tou", "prices must be non-negative")
    f = cfg.fleet
    if f.n_evs <= 0:
        _fail("fleet.n_evs", "must be positive")
    if f.capacity <= 0:
        _fail("fleet.capacity", "must be positive")
    if f.speed <= 0:
        _fail("fleet.speed", "must be positive")
    r = cfg.requests
    if r.daily_requests < 0:
        _fail("requests.daily_requests", "must be non-negative")
    if len(r.profile) != 24 or any(w < 0 for w in r.profile):
        _fail("requests.profile", "needs 24 non-negative hourly weights")
    if r.daily_requests > 0 and sum(r.profile) <= 0:
        _fail("requests.profile", "weights must not all be zero")
    if not 0 <= r.q_prob <= 1:
        _fail("requests.q_prob", "must lie in [0, 1]")
    if not 0 <= r.soc_min <= r.soc_max <= 1:
        _fail("requests.soc_min", "need 0 <= soc_min <= soc_max <= 1")
    if r.min_gap < 0:
        _fail("requests.min_gap", "must be non-negative")
    s = cfg.stations
    piles = (s.piles,) if isinstance(s.piles, int) else tuple(s.piles)
    if any(int(p) != p or p < 0 for p in piles):
        _fail("stations.piles", "pile counts must be non-negative integers")
    if not isinstance(s.piles, int) and len(piles) != len(cfg.network.fcs_nodes):
        _fail("stations.piles", "one pile count per FCS node")
    if s.base_load <= 0:
        _fail("stations.base_load", "must be positive")
    if s.demand_prior < 0:
        _fail("stations.demand_prior", "must be non-negative")
    if not 0 < s.ewma_alpha <= 1:
        _fail("stations.ewma_alpha", "must lie in (0, 1]")
    if s.ewma_window < 1 or s.steps_per_day < 1:
        _fail("stations.ewma_window", "window and steps_per_day must be positive")
    h = cfg.hps
    if h.tanker_speed <= 0:
        _fail("hps.tanker_speed", "must be positive")
    for name in ("wind_trace", "solar_trace"):
        trace = getattr(h, name)
        if trace is None:
            continue
        if len(trace) != len(cfg.network.hps_nodes):
            _fail(f"hps.{name}", "one row per HPS node")
        for k, row in enumerate(trace):
            if len(row) < cfg.T:
                _fail(f"hps.{name}[{k}]", f"needs at least {cfg.T} entries")
            if any(x < 0 for x in row):
                _fail(f"hps.{name}[{k}]", "values must be non-negative")
    sv = cfg.solver
    if sv.epsilon <= 0:
        _fail("solver.epsilon", "must be positive")
    if sv.max_iter < 1:
        _fail("solver.max_iter", "must be at least 1")
    if sv.init not in ("vertices", "zero", "random"):
        _fail("solver.init", f"unknown init {sv.init!r}")
    if cfg.costs.penalty < 0:
        _fail("costs.penalty", "must be non-negative")


def station_piles(cfg: ScenarioConfig) -> tuple:
    n = len(cfg.network.fcs_nodes)
    p = cfg.stations.piles
    return (int(p),) * n if isinstance(p, int) else tuple(int(x) for x in p)


def tou_vector(cfg: ScenarioConfig):
    if cfg.tou is not None:
        return tuple(float(x) for x in cfg.tou[: cfg.T])
    return tuple(DEFAULT_TOU_HOURLY[int(t * cfg.delta) % 24] for t in range(cfg.T))


# --- loading -----------------------------------------------------------------


def _freeze(value):
    if isinstance(value, list):
        return tuple(_freeze(v) for v in value)
    return value


def _coerce(tp, value, path):
    origin = typing.get_origin(tp)
    if origin is Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            if len(args) < len(typing.get_args(tp)):
                return None
            _fail(path, "must not be null")
        errors = []
        for a in args:
            try:
                return _coerce(a, value, path)
            except ConfigError as exc:
                errors.append(exc)
        raise errors[0]
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)
    if tp is bool:
        if not isinstance(value, bool):
            _fail(path, f"expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            _fail(path, f"expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            _fail(path, f"expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            _fail(path, f"expected a string, got {value!r}")
        return value
    if tp is tuple:
        if not isinstance(value, (list, tuple)):
            _fail(path, f"expected a list, got {value!r}")
        return _freeze(list(value))
    return value


def _build(cls, doc, path=""):
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        _fail(path, f"expected a mapping, got {type(doc).__name__}")
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls) if f.init}
    kwargs = {}
    for key, value in doc.items():
        sub = f"{path}.{key}" if path else str(key)
        if key not in known:
            _fail(sub, "unknown field")
        kwargs[key] = _coerce(hints[key], value, sub)
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        if path and not exc.path.startswith(path):
            raise ConfigError(f"{path}.{exc.path}", str(exc).split(": ", 1)[1]) from exc
        raise
    except (TypeError, ValueError) as exc:
        _fail(path, str(exc))


def config_from_dict(doc: Optional[dict]) -> ScenarioConfig:
    return _build(ScenarioConfig, doc or {})


def load_config(path: Union[str, Path, None]) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"invalid YAML in {path}: {exc}") from exc
    return config_from_dict(doc)


def config_to_dict(cfg) -> dict:
    def conv(v):
        if dataclasses.is_dataclass(v):
            return {f.name: conv(getattr(v, f.name)) for f in dataclasses.fields(v)}
        if isinstance(v, tuple):
            return [conv(x) for x in v]
        return v

    return conv(cfg)


def with_overrides(cfg: ScenarioConfig, **sections) -> ScenarioConfig:
    """Copy with fields replaced; nested sections take a dict of field values,
    e.g. ``with_overrides(cfg, stations={"piles": 6})``."""
    changes = {}
    for name, value in sections.items():
        current = getattr(cfg, name)
        if isinstance(value, dict) and dataclasses.is_dataclass(current):
            changes[name] = dataclasses.replace(current, **value)
        else:
            changes[name] = value
    return dataclasses.replace(cfg, **changes)


__all__ = [
    "ChargerSpec", "ConfigError", "CostConstants", "FleetConfig", "GridSpec", "HpsConfig",
    "NetworkConfig", "RequestConfig", "ScenarioConfig", "SolverConfig", "StationConfig",
    "config_from_dict", "config_to_dict", "load_config", "station_piles", "tou_vector",
    "with_overrides",
]
