"""Receding-horizon simulation: build each step's problem from the current
state, solve it with the chosen strategy, apply the decision, advance.

The request stream, wind/solar traces and TOU prices are drawn up front from
independent seeded streams, so every strategy (and every sweep value that
does not touch the stream) sees exactly the same requests.
"""
from __future__ import annotations

import dataclasses
import json
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bilevel import PenaltyBelowBoundWarning, optimize_step
from .config import ScenarioConfig, config_to_dict, station_piles, tou_vector
from .dispatch import optimal_dispatch
from .ev_cost import (
    NEXT,
    NOW,
    CostBreakdown,
    EvState,
    HpsSupply,
    Request,
    StationSlots,
    StepProblem,
    edge_components,
    station_prices,
    step_objective,
    zero_dispatch,
)
from .matching import best_assignment, gamma_bound
from .network import RoadNetwork, hps_fcs_distances, supply_matrix
from .renewables import HpsState, hydrogen_power, pv_power, wind_power
from .station import FcsState, Occupant, advance_station, steps_to_full

BIBBG = "BI-BBG"
BASELINES = ("MinDistance", "MinPrice", "MinCost", "NearDis", "AveDis")
STRATEGIES = (BIBBG,) + BASELINES
DOMINANCE_TOL = 1e-6


class StepError(RuntimeError):
    def __init__(self, t: int, cause: Exception):
        super().__init__(f"step {t}: {type(cause).__name__}: {cause}")
        self.t = t
        self.cause = cause


# --- scenario ----------------------------------------------------------------


@dataclass(frozen=True)
class RequestEvent:
    rid: int  # position in the stream
    t: int  # step of the first request
    ev: int  # fleet index
    node: object
    origin: object
    q: int
    soc: float
    destination: object = None


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    seed: int
    network: RoadNetwork
    fleet: tuple  # EvState, one per vehicle (soc is a placeholder)
    fcs: tuple  # initial FcsState per station
    hps: tuple  # HpsState per production site
    wind: np.ndarray  # HPS x T, m/s
    solar: np.ndarray  # HPS x T, W/m^2
    tou: np.ndarray  # T, CNY/kWh
    requests: tuple  # RequestEvent, sorted by (t, rid)

    @property
    def T(self) -> int:
        return self.config.T

    @property
    def delta(self) -> float:
        return self.config.delta


def grid_network(rows: int, cols: int, spacing: float, fcs_nodes, hps_nodes) -> RoadNetwork:
    """Rectangular street grid; node ``r * cols + c``."""
    arcs = []
    for r in range(rows):
        for c in range(cols):
            n = r * cols + c
            if c + 1 < cols:
                arcs.append((n, n + 1, spacing))
            if r + 1 < rows:
                arcs.append((n, n + cols, spacing))
    return RoadNetwork(
        nodes=list(range(rows * cols)), arcs=arcs, fcs_nodes=list(fcs_nodes), hps_nodes=list(hps_nodes)
    )


def build_network(cfg: ScenarioConfig) -> RoadNetwork:
    nc = cfg.network
    if nc.nodes is not None:
        return RoadNetwork(
            nodes=list(nc.nodes), arcs=[tuple(a) for a in (nc.arcs or ())],
            fcs_nodes=list(nc.fcs_nodes), hps_nodes=list(nc.hps_nodes),
        )
    g = nc.grid
    return grid_network(g.rows, g.cols, g.spacing, nc.fcs_nodes, nc.hps_nodes)


def request_rates(cfg: ScenarioConfig) -> np.ndarray:
    """Expected number of new requests in each step."""
    r = cfg.requests
    if r.daily_requests == 0:
        return np.zeros(cfg.T)
    hours = (np.arange(cfg.T) * cfg.delta).astype(int) % 24
    w = np.asarray(r.profile, dtype=float)[hours]
    # normalize over one day of steps so the daily integral is daily_requests
    per_day = int(round(24 / cfg.delta))
    day_hours = (np.arange(per_day) * cfg.delta).astype(int) % 24
    scale = r.daily_requests / np.asarray(r.profile, dtype=float)[day_hours].sum()
    return w * scale


def _diurnal_wind(rng, mean, T, delta):
    hours = np.arange(T) * delta
    base = mean * (1.0 + 0.25 * np.cos(2 * np.pi * (hours - 3.0) / 24.0))
    noise = np.zeros(T)
    for t in range(1, T):
        noise[t] = 0.9 * noise[t - 1] + rng.normal(0.0, 0.6)
    return np.clip(base + noise, 0.0, None)


def _diurnal_solar(rng, peak, T, delta):
    hours = (np.arange(T) * delta) % 24
    shape = np.clip(np.sin(np.pi * (hours - 6.0) / 12.0), 0.0, None)
    cloud = np.repeat(rng.uniform(0.6, 1.0, size=T // 4 + 1), 4)[:T]
    return peak * shape * cloud


def generate_scenario(cfg: ScenarioConfig, seed: int) -> Scenario:
    net = build_network(cfg)
    req_rng, wind_rng, solar_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)
    )
    fleet = tuple(
        EvState(id=j, soc=1.0, capacity=cfg.fleet.capacity, speed=cfg.fleet.speed)
        for j in range(cfg.fleet.n_evs)
    )
    piles = station_piles(cfg)
    fcs = tuple(
        FcsState(
            total_piles=p, available=p, base_load=cfg.stations.base_load,
            demand_estimate=cfg.stations.demand_prior, maint=cfg.stations.maintenance,
        )
        for p in piles
    )
    h = cfg.hps
    hps = tuple(
        HpsState(wind=h.wind, pv=h.pv, chain=h.chain, maint_wind=h.maint_wind, maint_pv=h.maint_pv,
                 delivery=h.delivery)
        for _ in net.hps_nodes
    )
    n_h = len(net.hps_nodes)
    wind = np.array(
        [row[: cfg.T] for row in h.wind_trace] if h.wind_trace is not None
        else [_diurnal_wind(wind_rng, h.mean_wind, cfg.T, cfg.delta) for _ in range(n_h)],
        dtype=float,
    ).reshape(n_h, cfg.T)
    solar = np.array(
        [row[: cfg.T] for row in h.solar_trace] if h.solar_trace is not None
        else [_diurnal_solar(solar_rng, h.peak_radiation, cfg.T, cfg.delta) for _ in range(n_h)],
        dtype=float,
    ).reshape(n_h, cfg.T)

    # request stream: Poisson counts per step, then per-request attributes
    r = cfg.requests
    counts = req_rng.poisson(request_rates(cfg))
    nodes = list(net.nodes)
    last = np.full(cfg.fleet.n_evs, -(10**9))
    events = []
    for t, n in enumerate(counts):
        for _ in range(int(n)):
            free = np.nonzero(t - last >= r.min_gap)[0]
            ev = int(req_rng.choice(free)) if free.size else int(np.argmin(last))
            last[ev] = t
            q = int(req_rng.uniform() < r.q_prob)
            node = nodes[int(req_rng.integers(len(nodes)))]
            origin = nodes[int(req_rng.integers(len(nodes)))]
            dest = nodes[int(req_rng.integers(len(nodes)))]
            soc = float(req_rng.uniform(r.soc_min, r.soc_max))
            events.append(
                RequestEvent(
                    rid=len(events), t=t, ev=ev, node=node, origin=origin, q=q, soc=soc,
                    destination=dest if q else None,
                )
            )
    return Scenario(
        config=cfg, seed=seed, network=net, fleet=fleet, fcs=fcs, hps=hps, wind=wind, solar=solar,
        tou=np.asarray(tou_vector(cfg), dtype=float), requests=tuple(events),
    )


# --- demand estimate ---------------------------------------------------------


def estimate_demand(
    history: Sequence[float], t: int, prior: float = 100.0, alpha: float = 0.5, window: int = 4,
    period: int = 96,
) -> float:
    """EWMA over the last ``window`` observations at the same time of day.

    ``history[s]`` is the realized energy of step ``s`` (NaN when unknown);
    the newest observation gets weight 1, each older one ``1 - alpha`` times
    the previous. Without observations the prior is returned.
    """
    obs = []
    s = t - period
    while s >= 0 and len(obs) < window:
        if s < len(history) and np.isfinite(history[s]):
            obs.append(float(history[s]))
        s -= period
    if not obs:
        return float(prior)
    w = (1.0 - alpha) ** np.arange(len(obs))
    return float(np.dot(w, obs) / w.sum())


# --- one step ----------------------------------------------------------------


@dataclass(frozen=True)
class StepWorld:
    """Everything a strategy may look at in one step."""

    t: int
    problem: StepProblem
    posted: np.ndarray  # per-station price announced before dispatch
    hps_dist: np.ndarray  # HPS x FCS km
    events: tuple  # RequestEvent behind each request, same order


def _strategy_greedy(world: StepWorld, key) -> tuple:
    p = world.problem
    now = [s.available for s in p.stations]
    nxt = [s.departing for s in p.stations]
    out = []
    for j, req in enumerate(p.requests):
        best = None
        for i in range(p.n_fcs):
            if not p.reach[i, j] or now[i] + nxt[i] == 0:
                continue
            kind = NOW if now[i] else NEXT
            k = (key(j, req, i, kind), i)
            if best is None or k < best[0]:
                best = (k, i, kind)
        if best is None:
            out.append(None)
            continue
        _, i, kind = best
        (now if kind == NOW else nxt)[i] -= 1
        out.append((i, kind))
    return tuple(out)


def baseline_step(world: StepWorld, strategy: str) -> tuple:
    """Decision ``(H, assignment)`` of one of the five baseline rules."""
    p = world.problem
    if strategy in ("MinDistance", "MinPrice", "MinCost"):
        if strategy == "MinDistance":
            key = lambda j, req, i, kind: req.to_fcs[i]
        elif strategy == "MinPrice":
            key = lambda j, req, i, kind: world.posted[i]
        else:
            key = lambda j, req, i, kind: edge_components(
                req, i, world.posted[i], p.consts, p.delta, kind
            ).assignment_cost
        G = _strategy_greedy(world, key)
        return optimal_dispatch(G, p).H, G
    if strategy in ("NearDis", "AveDis"):
        H = zero_dispatch(p)
        for k, hps in enumerate(p.hps):
            targets = np.nonzero(p.supply[k])[0]
            if targets.size == 0:
                continue
            if strategy == "NearDis":
                i = min(targets, key=lambda i: (world.hps_dist[k, i], i))
                H[k, i] = hps.p_hydrogen
            else:
                H[k, targets] = hps.p_hydrogen / targets.size
        return H, best_assignment(p, station_prices(p, H)).assignment
    raise ValueError(f"unknown strategy {strategy!r}")


@dataclass
class StepRecord:
    t: int
    breakdown: CostBreakdown
    served: int
    iterations: int = 0
    converged: bool = True
    vertices: int = 0
    below_bound: bool = False
    trace: Optional[list] = None  # (iteration, J after matching, J after LP)
    initial_J: Optional[float] = None
    decision: Optional[tuple] = None  # ((rid, fcs, kind) per served request, H)
    seconds: float = 0.0  # wall time, never written to report files


def solve_world(world: StepWorld, strategy: str, cfg: ScenarioConfig, rng=None) -> tuple:
    """Returns ``(H, assignment, StepRecord fields)`` for one step."""
    p = world.problem
    extra = {}
    if strategy == BIBBG:
        sv = cfg.solver
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PenaltyBelowBoundWarning)
            sol = optimize_step(p, epsilon=sv.epsilon, max_iter=sv.max_iter, init=sv.init, rng=rng)
        extra = dict(
            iterations=sol.trace.iterations, converged=sol.trace.converged, vertices=sol.trace.seeds,
            trace=list(sol.trace.rows), initial_J=sol.trace.initial,
        )
        return sol.H, sol.assignment, extra
    H, G = baseline_step(world, strategy)
    return H, G, extra


class Engine:
    """Mutable simulation state for one run."""

    def __init__(self, sc: Scenario):
        self.sc = sc
        cfg = sc.config
        self.cfg = cfg
        self.fcs = [replace(f) for f in sc.fcs]
        self.pending: list = []  # RequestEvent carried over from earlier steps
        self.ratio = np.ones(len(self.fcs))  # last price / TOU, announced to baselines
        self.realized = np.full((len(self.fcs), cfg.T), np.nan)  # kWh arriving per step
        self.supply = (
            supply_matrix(sc.network, cfg.hps.tanker_speed, cfg.delta)
            if sc.network.n_hps else np.zeros((0, sc.network.n_fcs), dtype=np.int8)
        )
        self.hps_dist = hps_fcs_distances(sc.network)
        self.by_step: dict = {}
        for ev in sc.requests:
            self.by_step.setdefault(ev.t, []).append(ev)
        self.stored_energy = 0.0
        self.served_energy = 0.0
        self._req_cache: dict = {}

    def _request(self, ev: RequestEvent) -> Request:
        if ev.rid not in self._req_cache:
            spec = self.sc.fleet[ev.ev]
            state = EvState(
                id=ev.rid, soc=ev.soc, capacity=spec.capacity, q=ev.q, position=ev.node,
                origin=ev.origin, destination=ev.destination, requesting=True, speed=spec.speed,
            )
            self._req_cache[ev.rid] = Request.from_ev(state, self.sc.network)
        return self._req_cache[ev.rid]

    def world(self, t: int) -> StepWorld:
        cfg, sc = self.cfg, self.sc
        events = tuple(self.pending) + tuple(self.by_step.get(t, ()))
        requests = tuple(self._request(e) for e in events)
        s = cfg.stations
        for i, f in enumerate(self.fcs):
            f.demand_estimate = estimate_demand(
                self.realized[i], t, s.demand_prior, s.ewma_alpha, s.ewma_window, s.steps_per_day
            )
        stations = tuple(
            StationSlots(f.available, len(f.departing), f.base_load, f.demand_estimate) for f in self.fcs
        )
        hps = []
        for k, h in enumerate(sc.hps):
            pw = wind_power(sc.wind[k, t], h.wind)
            pp = pv_power(sc.solar[k, t], h.pv)
            hps.append(
                HpsSupply(
                    p_hydrogen=hydrogen_power(sc.wind[k, t], sc.solar[k, t], h), p_wind=pw, p_pv=pp,
                    maint_wind=h.maint_wind, maint_pv=h.maint_pv, delivery=h.delivery,
                )
            )
        reach = np.array(
            [[r.to_fcs[i] <= r.speed * cfg.delta for r in requests] for i in range(len(self.fcs))],
            dtype=np.int8,
        ).reshape(len(self.fcs), len(requests))
        problem = StepProblem(
            requests=requests, stations=stations, hps=hps, reach=reach, supply=self.supply,
            tou=float(sc.tou[t]), delta=cfg.delta, consts=cfg.costs,
        )
        return StepWorld(t, problem, self.ratio * sc.tou[t], self.hps_dist, events)

    def apply(self, world: StepWorld, H, assignment) -> CostBreakdown:
        """Validate, cost and apply one decision; returns the step breakdown."""
        p, cfg = world.problem, self.cfg
        breakdown = step_objective(assignment, H, p)  # raises on any constraint violation
        prices = station_prices(p, H)
        now = [[] for _ in self.fcs]
        deferred = [[] for _ in self.fcs]
        energy = np.zeros(len(self.fcs))
        carry = []
        for j, slot in enumerate(assignment):
            ev = world.events[j]
            if slot is None:
                if cfg.solver.rerequest:
                    carry.append(ev)
                continue
            i, kind = slot
            req = p.requests[j]
            e = edge_components(req, i, prices[i], p.consts, p.delta, kind)
            energy[i] += e.energy
            self.served_energy += e.energy
            # battery level on arrival, after the drive to the station
            soc = max(0.0, req.soc - p.consts.energy_loss * req.to_fcs[i] / req.capacity)
            hours = e.energy / (e.power * p.consts.efficiency)
            occ = Occupant(
                ev_id=ev.rid, soc=soc, power=e.power, capacity=req.capacity,
                efficiency=p.consts.efficiency, steps_left=max(1, steps_to_full(hours, p.delta)),
            )
            (now if kind == NOW else deferred)[i].append(occ)
        for i, f in enumerate(self.fcs):
            res = advance_station(f, now[i], deferred[i], p.delta)
            res.state.price = float(prices[i])
            self.fcs[i] = res.state
            self.stored_energy += res.stored_energy
        self.realized[:, world.t] = energy
        self.ratio = prices / p.tou if p.tou > 0 else np.ones(len(self.fcs))
        self.pending = carry
        return breakdown

    def residual_energy(self) -> float:
        """Energy still owed to EVs on piles when the run ends (kWh)."""
        return sum((1.0 - o.soc) * o.capacity for f in self.fcs for o in f.occupants)


# --- runs --------------------------------------------------------------------


@dataclass
class RunReport:
    strategy: str
    seed: int
    steps: list = field(default_factory=list)  # StepRecord
    energy: dict = field(default_factory=dict)

    @property
    def totals(self) -> CostBreakdown:
        out = CostBreakdown()
        for s in self.steps:
            out = out + s.breakdown
        return out

    @property
    def service_rate(self) -> float:
        tot = self.totals
        if tot.requests == 0:
            return 1.0
        return 1.0 - tot.unserved / tot.requests

    @property
    def iteration_stats(self) -> dict:
        its = [s.iterations for s in self.steps if s.iterations]
        if not its:
            return {"mean": 0.0, "max": 0, "unconverged": 0}
        return {
            "mean": float(np.mean(its)),
            "max": int(max(its)),
            "unconverged": sum(not s.converged for s in self.steps),
        }

    def summary(self) -> dict:
        tot = self.totals
        row = {
            "strategy": self.strategy, "seed": self.seed,
            "charge": tot.charge, "wait": tot.wait, "idle": tot.idle,
            "depreciation": tot.depreciation, "penalty": tot.penalty, "uncharged": tot.unserved,
            "fcs_maint": tot.fcs_maint, "hps_maint": tot.hps_maint, "delivery": tot.delivery,
            "total": tot.total, "requests": tot.requests, "service_rate": self.service_rate,
        }
        return row


def _rng_for(seed: int, t: int):
    return np.random.default_rng([seed, t])


def run_horizon(
    sc: Scenario, strategy: str, seed: Optional[int] = None, keep_decisions: bool = False,
    on_step=None,
) -> RunReport:
    """Simulate all T steps under ``strategy``.

    ``seed`` feeds the random initialization of the bi-level solver (when the
    config asks for it) and defaults to the scenario seed. ``on_step`` is
    called as ``on_step(engine, world, record)`` after each step.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {', '.join(STRATEGIES)}")
    seed = sc.seed if seed is None else seed
    eng = Engine(sc)
    report = RunReport(strategy=strategy, seed=seed)
    for t in range(sc.T):
        try:
            world = eng.world(t)
            start = time.perf_counter()
            H, G, extra = solve_world(world, strategy, sc.config, _rng_for(seed, t))
            elapsed = time.perf_counter() - start
            breakdown = eng.apply(world, H, G)
        except Exception as exc:
            raise StepError(t, exc) from exc
        p = world.problem
        rec = StepRecord(
            t=t, breakdown=breakdown, served=sum(s is not None for s in G),
            below_bound=p.consts.penalty < gamma_bound(p), seconds=elapsed, **extra,
        )
        if keep_decisions:
            served = tuple(
                (world.events[j].rid, s[0], s[1]) for j, s in enumerate(G) if s is not None
            )
            rec.decision = (served, np.array(H, dtype=float))
        report.steps.append(rec)
        if on_step is not None:
            on_step(eng, world, rec)
    report.energy = {
        "served_potential": eng.served_energy,
        "stored": eng.stored_energy,
        "residual": eng.residual_energy(),
    }
    return report


@dataclass
class FrozenComparison:
    """Per-step costs of every strategy evaluated on the same incoming state
    (the state reached by following the bi-level solver)."""

    strategies: tuple
    J: np.ndarray  # T x strategies
    report: Optional[RunReport] = None  # the bi-level run that produced the states

    def violations(self, tol: float = DOMINANCE_TOL) -> list:
        """(t, strategy, J_bibbg, J_other) where the bi-level solver lost."""
        out = []
        ref = self.strategies.index(BIBBG)
        for t in range(self.J.shape[0]):
            for s, name in enumerate(self.strategies):
                if self.J[t, ref] > self.J[t, s] + tol:
                    out.append((t, name, float(self.J[t, ref]), float(self.J[t, s])))
        return out


def frozen_comparison(
    sc: Scenario, strategies: Sequence[str] = STRATEGIES, seed=None, on_step=None,
    keep_decisions: bool = False,
) -> FrozenComparison:
    strategies = tuple(strategies)
    if BIBBG not in strategies:
        strategies = (BIBBG,) + strategies
    rows = []

    def hook(eng, world, rec):
        row = []
        for name in strategies:
            if name == BIBBG:
                row.append(rec.breakdown.total)
                continue
            H, G = baseline_step(world, name)
            row.append(step_objective(G, H, world.problem).total)
        rows.append(row)
        if on_step is not None:
            on_step(eng, world, rec)

    report = run_horizon(sc, BIBBG, seed=seed, on_step=hook, keep_decisions=keep_decisions)
    J = np.array(rows, dtype=float).reshape(len(rows), len(strategies))
    return FrozenComparison(strategies, J, report)


# --- report files ------------------------------------------------------------

STEP_COLUMNS = (
    "t", "requests", "served", "unserved", "charge", "wait", "idle", "depreciation", "fcs_maint",
    "hps_maint", "delivery", "penalty", "total", "iterations", "converged",
)


def report_stem(strategy: str, seed: int) -> str:
    return f"{strategy}_seed{seed}"


def report_rows(report: RunReport) -> list:
    rows = []
    for s in report.steps:
        b = s.breakdown
        rows.append([
            s.t, b.requests, s.served, b.unserved, b.charge, b.wait, b.idle, b.depreciation,
            b.fcs_maint, b.hps_maint, b.delivery, b.penalty, b.total, s.iterations, int(s.converged),
        ])
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def report_tsv(report: RunReport) -> str:
    lines = ["\t".join(STEP_COLUMNS)]
    for row in report_rows(report):
        lines.append("\t".join(_fmt(v) for v in row))
    tot = report.totals
    its = report.iteration_stats
    lines.append("\t".join(_fmt(v) for v in [
        "total", tot.requests, tot.requests - tot.unserved, tot.unserved, tot.charge, tot.wait,
        tot.idle, tot.depreciation, tot.fcs_maint, tot.hps_maint, tot.delivery, tot.penalty,
        tot.total, its["mean"], len(report.steps) - its["unconverged"],
    ]))
    return "\n".join(lines) + "\n"


def report_json(report: RunReport, config: Optional[ScenarioConfig] = None) -> str:
    doc = {
        "strategy": report.strategy,
        "seed": report.seed,
        "summary": report.summary(),
        "iterations": report.iteration_stats,
        "energy": report.energy,
        "steps": [dict(zip(STEP_COLUMNS, row)) for row in report_rows(report)],
    }
    if config is not None:
        doc["config"] = config_to_dict(config)
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def write_report(report: RunReport, out_dir, config: Optional[ScenarioConfig] = None) -> tuple:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = report_stem(report.strategy, report.seed)
    tsv, js = out / f"{stem}.tsv", out / f"{stem}.json"
    tsv.write_text(report_tsv(report))
    js.write_text(report_json(report, config))
    return tsv, js


__all__ = [
    "BASELINES", "BIBBG", "Engine", "FrozenComparison", "RequestEvent", "RunReport", "STRATEGIES",
    "Scenario", "StepError", "StepRecord", "StepWorld", "baseline_step", "build_network",
    "estimate_demand", "frozen_comparison", "generate_scenario", "grid_network", "report_json",
    "report_tsv", "request_rates", "run_horizon", "write_report",
]
