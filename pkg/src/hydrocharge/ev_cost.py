"""Per-EV assignment costs and the per-step objective.

A step problem is a frozen snapshot of everything one time step needs:
requesting EVs with their distances, station slots, hydrogen supply and the
two reachability matrices. Assignments are tuples with one entry per
request, either ``None`` or ``(fcs, kind)`` where kind is ``NOW`` or
``NEXT`` (a pile freed at the next step, with one extra step of waiting).
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from .network import RoadNetwork, fcs_distances, shortest_distance
from .station import ChargerSpec, charging_power, charging_price

NOW, NEXT = 0, 1
LP_TOL = 1e-9

Slot = Optional[tuple]  # (fcs index, NOW | NEXT) or None
Assignment = tuple  # one Slot per request


class ConstraintViolation(ValueError):
    def __init__(self, constraint: str, detail: str):
        super().__init__(f"{constraint} constraint violated: {detail}")
        self.constraint = constraint


@dataclass(frozen=True)
class CostConstants:
    wait: float = 17.2  # CNY/h
    idle: float = 21.0  # CNY/h
    depreciation: float = 0.025  # CNY/km
    maintenance: float = 0.018  # CNY/kW
    energy_loss: float = 0.014  # kWh/km
    efficiency: float = 0.92
    penalty: float = 300.0  # CNY per unserved request
    charger: ChargerSpec = field(default_factory=ChargerSpec)

    def power(self, q: int) -> float:
        return charging_power(q, self.charger)


@dataclass(frozen=True)
class EvState:
    id: int
    soc: float
    capacity: float = 75.0
    q: int = 0
    position: object = None
    origin: object = None
    destination: object = None
    requesting: bool = False
    speed: float = 60.0

    def __post_init__(self):
        if not 0 <= self.soc <= 1:
            raise ValueError("soc must lie in [0, 1]")
        if (self.destination is not None) != bool(self.q):
            raise ValueError("a destination is set exactly when a passenger is on board")


@dataclass(frozen=True)
class Request:
    """A requesting EV with distances already resolved on the network."""

    ev_id: int
    q: int
    soc: float
    capacity: float
    speed: float
    l0: float
    to_fcs: tuple  # km from the request node to each FCS
    to_dest: tuple  # km from each FCS to the destination (zeros when q == 0)

    @classmethod
    def from_ev(cls, ev: EvState, net: RoadNetwork) -> "Request":
        to_fcs = tuple(fcs_distances(net, ev.position))
        if ev.q:
            to_dest = tuple(shortest_distance(net, f, ev.destination) for f in net.fcs_nodes)
        else:
            to_dest = (0.0,) * net.n_fcs
        origin = ev.origin if ev.origin is not None else ev.position
        return cls(
            ev_id=ev.id, q=ev.q, soc=ev.soc, capacity=ev.capacity, speed=ev.speed,
            l0=shortest_distance(net, origin, ev.position), to_fcs=to_fcs, to_dest=to_dest,
        )


@dataclass(frozen=True)
class StationSlots:
    available: int
    departing: int
    base_load: float  # kW
    demand: float  # kWh per step


@dataclass(frozen=True)
class HpsSupply:
    p_hydrogen: float  # kW
    p_wind: float = 0.0
    p_pv: float = 0.0
    maint_wind: float = 0.018
    maint_pv: float = 0.018
    delivery: float = 0.04


@dataclass(frozen=True)
class StepProblem:
    requests: tuple
    stations: tuple
    hps: tuple
    reach: np.ndarray  # FCS x request
    supply: np.ndarray  # HPS x FCS
    tou: float
    delta: float
    consts: CostConstants = field(default_factory=CostConstants)

    def __post_init__(self):
        object.__setattr__(self, "requests", tuple(self.requests))
        object.__setattr__(self, "stations", tuple(self.stations))
        object.__setattr__(self, "hps", tuple(self.hps))
        reach = np.asarray(self.reach, dtype=np.int8).reshape(len(self.stations), len(self.requests))
        supply = np.asarray(self.supply, dtype=np.int8).reshape(len(self.hps), len(self.stations))
        object.__setattr__(self, "reach", reach)
        object.__setattr__(self, "supply", supply)

    @property
    def n_fcs(self) -> int:
        return len(self.stations)

    @property
    def n_hps(self) -> int:
        return len(self.hps)

    @property
    def n_requests(self) -> int:
        return len(self.requests)

    @property
    def total_slots(self) -> int:
        return sum(s.available + s.departing for s in self.stations)

    def with_penalty(self, gamma: float) -> "StepProblem":
        from dataclasses import replace

        return replace(self, consts=replace(self.consts, penalty=gamma))


@dataclass
class CostBreakdown:
    charge: float = 0.0
    wait: float = 0.0
    idle: float = 0.0
    depreciation: float = 0.0
    fcs_maint: float = 0.0
    hps_maint: float = 0.0
    delivery: float = 0.0
    penalty: float = 0.0
    unserved: int = 0
    requests: int = 0

    COST_FIELDS = (
        "charge", "wait", "idle", "depreciation", "fcs_maint", "hps_maint", "delivery", "penalty",
    )

    @property
    def total(self) -> float:
        return sum(getattr(self, f) for f in self.COST_FIELDS)

    @property
    def hydrogen_part(self) -> float:
        """Terms that depend on dispatch only."""
        return self.hps_maint + self.delivery

    @property
    def coupled_part(self) -> float:
        """Terms that depend on both dispatch and assignment."""
        return self.charge

    @property
    def assignment_part(self) -> float:
        return self.wait + self.idle + self.depreciation + self.fcs_maint + self.penalty

    def __add__(self, other: "CostBreakdown") -> "CostBreakdown":
        return CostBreakdown(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)})

    def as_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["total"] = self.total
        return d


def potential_demand(soc: float, capacity: float, dist_to_fcs: float, e_loss: float) -> float:
    """Energy to refill the battery after driving ``dist_to_fcs`` km."""
    if dist_to_fcs < 0:
        raise ValueError("distance must be non-negative")
    return (1.0 - soc) * capacity + e_loss * dist_to_fcs


@dataclass(frozen=True)
class EdgeCost:
    energy: float
    power: float
    charge: float
    wait: float
    idle: float
    depreciation: float
    maint: float

    @property
    def assignment_cost(self) -> float:
        """The EV's own cost: charge + wait + idle + depreciation."""
        return self.charge + self.wait + self.idle + self.depreciation

    @property
    def total(self) -> float:
        return self.assignment_cost + self.maint


def edge_components(
    req: Request, i: int, price: float, consts: CostConstants, delta: float = 0.0, kind: int = NOW
) -> EdgeCost:
    """Cost terms of serving ``req`` at station ``i`` under ``price``.

    A ``NEXT`` slot adds one step of waiting cost on top of the EV cost.
    """
    q = req.q
    l_to = req.to_fcs[i]
    l_dest = req.to_dest[i] if q else 0.0
    energy = potential_demand(req.soc, req.capacity, l_to, consts.energy_loss)
    power = consts.power(q)
    hours = energy / (power * consts.efficiency)
    wait = q * consts.wait * ((l_to + l_dest) / req.speed + hours)
    if kind == NEXT:
        wait += consts.wait * delta
    return EdgeCost(
        energy=energy,
        power=power,
        charge=energy * price,
        wait=wait,
        idle=(1 - q) * consts.idle * hours,
        depreciation=consts.depreciation * (req.l0 + l_to + q * l_dest),
        maint=consts.maintenance * power,
    )


def ev_assignment_cost(
    ev: EvState, fcs: int, prices: Sequence[float], net: RoadNetwork, consts: CostConstants,
    delta: Optional[float] = None,
) -> float:
    """Cost of sending a requesting EV to station ``fcs``.

    With ``delta`` given, the station must be reachable within one step.
    """
    if not ev.requesting:
        raise ValueError(f"EV {ev.id} is not requesting a charge")
    req = Request.from_ev(ev, net)
    if delta is not None and req.to_fcs[fcs] > ev.speed * delta:
        raise ConstraintViolation("reachability", f"FCS {fcs} is out of reach of EV {ev.id}")
    return edge_components(req, fcs, prices[fcs], consts).assignment_cost


def station_hydrogen(H: np.ndarray, n_fcs: int) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if H.size == 0:
        return np.zeros(n_fcs)
    return H.sum(axis=0)


def station_prices(problem: StepProblem, H) -> np.ndarray:
    """Per-station charging price under dispatch ``H`` (HPS x FCS, kW)."""
    h = station_hydrogen(H, problem.n_fcs)
    d = problem.delta
    return np.array(
        [
            charging_price(s.base_load * d, s.demand, max(h[i], 0.0) * d, problem.tou)
            for i, s in enumerate(problem.stations)
        ]
    )


def zero_dispatch(problem: StepProblem) -> np.ndarray:
    return np.zeros((problem.n_hps, problem.n_fcs))


def empty_assignment(problem: StepProblem) -> Assignment:
    return (None,) * problem.n_requests


def assignment_matrix(problem: StepProblem, assignment: Assignment) -> np.ndarray:
    """G as a binary FCS x request matrix (slot kinds merged)."""
    G = np.zeros((problem.n_fcs, problem.n_requests), dtype=np.int8)
    for j, slot in enumerate(assignment):
        if slot is not None:
            G[slot[0], j] = 1
    return G


def check_assignment(problem: StepProblem, assignment: Assignment) -> None:
    if len(assignment) != problem.n_requests:
        raise ConstraintViolation(
            "single-assignment", f"{len(assignment)} entries for {problem.n_requests} requests"
        )
    now = [0] * problem.n_fcs
    nxt = [0] * problem.n_fcs
    for j, slot in enumerate(assignment):
        if slot is None:
            continue
        i, kind = slot
        if not 0 <= i < problem.n_fcs or kind not in (NOW, NEXT):
            raise ConstraintViolation("single-assignment", f"bad slot {slot} for request {j}")
        if not problem.reach[i, j]:
            raise ConstraintViolation("reachability", f"request {j} sent to unreachable FCS {i}")
        (now if kind == NOW else nxt)[i] += 1
    for i, s in enumerate(problem.stations):
        if now[i] > s.available or nxt[i] > s.departing:
            raise ConstraintViolation(
                "pile-capacity",
                f"FCS {i}: {now[i]} now / {nxt[i]} next vs {s.available} free / {s.departing} departing",
            )


def check_dispatch(problem: StepProblem, H, tol: float = LP_TOL) -> None:
    H = np.asarray(H, dtype=float).reshape(problem.n_hps, problem.n_fcs)
    if np.any(H < -tol):
        raise ConstraintViolation("supply-reach", "negative dispatch")
    if np.any(np.abs(H[problem.supply == 0]) > tol):
        raise ConstraintViolation("supply-reach", "dispatch to a station outside tanker range")
    for k, hps in enumerate(problem.hps):
        if H[k].sum() > hps.p_hydrogen + tol:
            raise ConstraintViolation(
                "supply-limit", f"HPS {k} dispatches {H[k].sum():.6f} kW of {hps.p_hydrogen:.6f}"
            )


def step_objective(
    assignment: Assignment, H, problem: StepProblem, gamma: Optional[float] = None,
    check: bool = True,
) -> CostBreakdown:
    """Realized step cost J_t of an assignment/dispatch pair."""
    if gamma is None:
        gamma = problem.consts.penalty
    H = np.asarray(H, dtype=float).reshape(problem.n_hps, problem.n_fcs)
    if check:
        check_assignment(problem, assignment)
        check_dispatch(problem, H)
    H = np.clip(H, 0.0, None)
    prices = station_prices(problem, H)
    out = CostBreakdown(requests=problem.n_requests)
    for j, slot in enumerate(assignment):
        if slot is None:
            out.unserved += 1
            continue
        i, kind = slot
        e = edge_components(problem.requests[j], i, prices[i], problem.consts, problem.delta, kind)
        out.charge += e.charge
        out.wait += e.wait
        out.idle += e.idle
        out.depreciation += e.depreciation
        out.fcs_maint += e.maint
    out.penalty = gamma * out.unserved
    for k, hps in enumerate(problem.hps):
        out.hps_maint += hps.maint_wind * hps.p_wind + hps.maint_pv * hps.p_pv
        out.delivery += hps.delivery * H[k].sum()
    return out


def step_cost(assignment: Assignment, H, problem: StepProblem, check: bool = False) -> float:
    return step_objective(assignment, H, problem, check=check).total
