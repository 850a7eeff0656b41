"""Fast-charging station dynamics: SoC evolution, pile bookkeeping,
charging power selection, hydrogen-aware pricing and pile maintenance."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

STEP_TOL = 1e-9


class PileCapacityError(RuntimeError):
    """More EVs were sent to a station than it has piles for."""


@dataclass(frozen=True)
class ChargerSpec:
    p_slow: float = 44.0  # kW, no passenger on board
    p_fast: float = 88.0  # kW, passenger on board

    def __post_init__(self):
        if not 0 < self.p_slow < self.p_fast:
            raise ValueError("fast charging power must exceed slow charging power")


@dataclass(frozen=True)
class Occupant:
    ev_id: int
    soc: float
    power: float  # kW
    capacity: float  # kWh
    efficiency: float
    steps_left: int  # whole steps until the pile frees up


@dataclass
class FcsState:
    total_piles: int = 20
    available: int = 20
    occupants: tuple = ()
    base_load: float = 200.0  # kW
    demand_estimate: float = 100.0  # kWh per step
    price: float = 0.0  # CNY/kWh, last computed
    maint: float = 0.018  # CNY/kW

    def __post_init__(self):
        self.occupants = tuple(self.occupants)
        self.check()

    def check(self):
        if not 0 <= self.available <= self.total_piles:
            raise PileCapacityError(
                f"available piles {self.available} outside [0, {self.total_piles}]"
            )
        if len(self.occupants) != self.total_piles - self.available:
            raise PileCapacityError("occupant count does not match used piles")
        for o in self.occupants:
            if not -STEP_TOL <= o.soc <= 1 + STEP_TOL or o.steps_left < 0:
                raise PileCapacityError(f"invalid occupant state {o}")

    @property
    def departing(self) -> tuple:
        """Occupants whose pile frees up at the next step (the set Theta)."""
        return tuple(o for o in self.occupants if o.steps_left <= 1)


def soc_step(soc: float, p: float, eta: float, delta: float, cap: float) -> float:
    if cap <= 0:
        raise ValueError("battery capacity must be positive")
    if p < 0:
        raise ValueError("charging power must be non-negative")
    return min(1.0, soc + p * eta * delta / cap)


def remaining_time(soc: float, cap: float, p: float, eta: float) -> float:
    """Hours left until a full battery."""
    if p <= 0:
        raise ValueError("charging power must be positive")
    return (1.0 - soc) * cap / (p * eta)


def steps_to_full(hours: float, delta: float) -> int:
    """Whole steps a pile stays occupied for a charge of ``hours``."""
    return max(0, math.ceil(hours / delta - STEP_TOL))


def charging_power(q: int, charger: ChargerSpec = ChargerSpec()) -> float:
    if q not in (0, 1):
        raise ValueError("service state must be 0 or 1")
    return charger.p_fast if q else charger.p_slow


def charging_price(base: float, demand: float, h_total: float, tou: float) -> float:
    """Grid price scaled by the share of the station load not covered by hydrogen.

    ``base``, ``demand`` and ``h_total`` must be in the same unit; the step
    model passes energies over one step (kW * delta and kWh).
    """
    load = base + demand
    if load <= 0:
        raise ValueError("base load plus demand must be positive")
    if h_total < 0:
        raise ValueError("dispatched hydrogen must be non-negative")
    return max((load - h_total) / load, 0.0) * tou


def fcs_maintenance(assigned_powers, c_m: float) -> float:
    total = 0.0
    for p in assigned_powers:
        if p < 0:
            raise ValueError("charging powers must be non-negative")
        total += p
    return c_m * total


def pile_update(fcs: FcsState, arrivals) -> FcsState:
    """Pile bookkeeping for one step: a' = a - arrivals + |departing|.

    ``arrivals`` is the sequence of arriving occupants; they may use piles
    freed at the next step by departing occupants.
    """
    arrivals = tuple(arrivals)
    theta = fcs.departing
    if len(arrivals) > fcs.available + len(theta):
        raise PileCapacityError(
            f"{len(arrivals)} arrivals exceed {fcs.available} free + {len(theta)} departing piles"
        )
    stay = tuple(replace(o, steps_left=o.steps_left - 1) for o in fcs.occupants if o.steps_left > 1)
    return replace(
        fcs,
        available=fcs.available - len(arrivals) + len(theta),
        occupants=stay + arrivals,
    )


def charge_occupant(o: Occupant, delta: float) -> tuple[Occupant, float]:
    """Advance one step; returns the updated occupant and energy stored (kWh)."""
    soc = soc_step(o.soc, o.power, o.efficiency, delta, o.capacity)
    stored = (soc - o.soc) * o.capacity
    return replace(o, soc=soc, steps_left=max(0, o.steps_left - 1)), stored


@dataclass
class StationStepResult:
    state: FcsState
    departed: list = field(default_factory=list)
    stored_energy: float = 0.0


def advance_station(fcs: FcsState, now: list, deferred: list, delta: float) -> StationStepResult:
    """One step of station dynamics.

    ``now`` arrivals take free piles and charge this step; ``deferred``
    arrivals take piles released by departing occupants and start charging
    from the next step.
    """
    theta = len(fcs.departing)
    if len(now) > fcs.available:
        raise PileCapacityError(f"{len(now)} arrivals but only {fcs.available} free piles")
    if len(deferred) > theta:
        raise PileCapacityError(f"{len(deferred)} deferred arrivals but {theta} departing")
    stored = 0.0
    keep, departed = [], []
    for o in list(fcs.occupants) + list(now):
        o, e = charge_occupant(o, delta)
        stored += e
        (keep if o.steps_left > 0 else departed).append(o)
    keep.extend(deferred)
    state = replace(fcs, occupants=tuple(keep), available=fcs.total_piles - len(keep))
    state.check()
    return StationStepResult(state=state, departed=departed, stored_energy=stored)
