"""Brute-force verifiers for the step problem.

Everything here enumerates assignments explicitly and never calls the
matching solver, so it can be used to check it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .dispatch import optimal_dispatch
from .ev_cost import (
    NEXT,
    NOW,
    CostConstants,
    HpsSupply,
    Request,
    StationSlots,
    StepProblem,
    edge_components,
    station_prices,
    step_objective,
    zero_dispatch,
)
from .matching import gamma_bound

ENUM_BUDGET = 1_000_000


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class Verdict:
    passed: bool
    message: str = ""
    witness: object = None

    def __bool__(self) -> bool:
        return self.passed


def random_instance(
    rng: np.random.Generator,
    max_requests: int = 4,
    max_fcs: int = 3,
    max_hps: int = 2,
    gamma: Optional[float] = None,
    delta: float = 0.25,
) -> StepProblem:
    """Small random step problem; ``gamma=None`` uses the instance's bound."""
    n = int(rng.integers(0, max_requests + 1))
    n_s = int(rng.integers(1, max_fcs + 1))
    n_h = int(rng.integers(0, max_hps + 1))
    requests = []
    for j in range(n):
        q = int(rng.integers(0, 2))
        requests.append(
            Request(
                ev_id=j, q=q, soc=float(rng.uniform(0.0, 0.9)),
                capacity=float(rng.choice([50.0, 75.0, 100.0])), speed=60.0,
                l0=float(rng.uniform(0, 10)),
                to_fcs=tuple(rng.uniform(0, 20, n_s)),
                to_dest=tuple(rng.uniform(0, 20, n_s)) if q else (0.0,) * n_s,
            )
        )
    reach = np.array(
        [[r.to_fcs[i] <= r.speed * delta for r in requests] for i in range(n_s)], dtype=np.int8
    ).reshape(n_s, n)
    stations = [
        StationSlots(
            available=int(rng.integers(0, 3)), departing=int(rng.integers(0, 2)),
            base_load=200.0, demand=float(rng.uniform(10, 200)),
        )
        for _ in range(n_s)
    ]
    hps = [
        HpsSupply(
            p_hydrogen=float(rng.uniform(0, 800)), p_wind=float(rng.uniform(0, 2200)),
            p_pv=float(rng.uniform(0, 880)),
        )
        for _ in range(n_h)
    ]
    supply = (rng.uniform(size=(n_h, n_s)) < 0.6).astype(np.int8)
    problem = StepProblem(
        requests=requests, stations=stations, hps=hps, reach=reach, supply=supply,
        tou=float(rng.uniform(0.3, 1.2)), delta=delta, consts=CostConstants(),
    )
    return problem.with_penalty(gamma_bound(problem) if gamma is None else gamma)


def enumerate_assignments(problem: StepProblem) -> Iterator[tuple]:
    """Every assignment that respects reachability and pile capacities."""
    n = problem.n_requests
    now = [s.available for s in problem.stations]
    nxt = [s.departing for s in problem.stations]
    options = []
    for j in range(n):
        opts = [None]
        for i in range(problem.n_fcs):
            if problem.reach[i, j]:
                opts += [(i, NOW), (i, NEXT)]
        options.append(opts)
    current = [None] * n

    def rec(j):
        if j == n:
            yield tuple(current)
            return
        for slot in options[j]:
            if slot is not None:
                i, kind = slot
                pool = now if kind == NOW else nxt
                if pool[i] == 0:
                    continue
                pool[i] -= 1
            current[j] = slot
            yield from rec(j + 1)
            if slot is not None:
                pool[i] += 1
        current[j] = None

    yield from rec(0)


def count_assignments(problem: StepProblem, budget: int = ENUM_BUDGET) -> int:
    count = 0
    for _ in enumerate_assignments(problem):
        count += 1
        if count > budget:
            raise BudgetExceeded(f"more than {budget} assignments")
    return count


@dataclass
class JointOptimum:
    J: float
    assignment: tuple
    H: np.ndarray
    evaluated: int


def enumerate_joint_optimum(problem: StepProblem, budget: int = ENUM_BUDGET) -> JointOptimum:
    """Minimum step cost over all assignments, each with its exact LP dispatch."""
    best = None
    count = 0
    for G in enumerate_assignments(problem):
        count += 1
        if count > budget:
            raise BudgetExceeded(f"more than {budget} assignments")
        H = optimal_dispatch(G, problem).H
        J = step_objective(G, H, problem).total
        if best is None or J < best.J:
            best = JointOptimum(J, G, H, 0)
    best.evaluated = count
    return best


def _edge_costs(problem: StepProblem, H) -> dict:
    prices = station_prices(problem, H)
    out = {}
    for j, req in enumerate(problem.requests):
        for i in range(problem.n_fcs):
            if problem.reach[i, j]:
                for kind in (NOW, NEXT):
                    out[(i, kind, j)] = edge_components(
                        req, i, prices[i], problem.consts, problem.delta, kind
                    ).total
    return out


def dispatch_grid(problem: StepProblem, levels: int = 3) -> Iterator[np.ndarray]:
    """Feasible dispatches on a per-pair grid; rows over supply are rescaled."""
    pairs = [(k, i) for k in range(problem.n_hps) for i in range(problem.n_fcs) if problem.supply[k, i]]
    fractions = np.linspace(0.0, 1.0, levels)
    for combo in itertools.product(fractions, repeat=len(pairs)):
        H = zero_dispatch(problem)
        for (k, i), f in zip(pairs, combo):
            H[k, i] = f * problem.hps[k].p_hydrogen
        for k in range(problem.n_hps):
            total, cap = H[k].sum(), problem.hps[k].p_hydrogen
            if total > cap > 0:
                H[k] *= cap / total
        yield H


def check_cardinality_dominance(
    problem: StepProblem, gamma: Optional[float] = None, levels: int = 3, tol: float = 1e-9
) -> Verdict:
    """Serving more EVs is strictly cheaper, for every dispatch examined.

    For each dispatch (a grid plus the joint-optimal one) every assignment
    with fewer served EVs must cost more than every assignment with more.
    """
    if gamma is not None:
        problem = problem.with_penalty(gamma)
    gamma = problem.consts.penalty
    assignments = list(enumerate_assignments(problem))
    if problem.n_requests == 0 or len(assignments) == 1:
        return Verdict(True, "vacuous")
    dispatches = list(dispatch_grid(problem, levels))
    dispatches.append(enumerate_joint_optimum(problem).H)
    for H in dispatches:
        M = _edge_costs(problem, H)
        by_card: dict[int, list] = {}
        for G in assignments:
            cost = gamma * sum(s is None for s in G)
            for j, s in enumerate(G):
                if s is not None:
                    cost += M[(s[0], s[1], j)]
            by_card.setdefault(sum(s is not None for s in G), []).append((cost, G))
        cards = sorted(by_card)
        for a, n1 in enumerate(cards):
            low = min(by_card[n1], key=lambda t: t[0])
            for n2 in cards[a + 1 :]:
                high = max(by_card[n2], key=lambda t: t[0])
                if not low[0] > high[0] + tol:
                    return Verdict(
                        False,
                        f"{n1} served costs {low[0]:.6f} <= {n2} served at {high[0]:.6f}",
                        witness={"H": H, "fewer": low[1], "more": high[1]},
                    )
    return Verdict(True, f"{len(assignments)} assignments x {len(dispatches)} dispatches")


def check_monotone_trace(trace, lower_bound: Optional[float] = None, tol: float = 1e-6) -> Verdict:
    seq = trace.sequence if hasattr(trace, "sequence") else list(trace)
    if not seq:
        return Verdict(False, "empty trace")
    for idx in range(1, len(seq)):
        if seq[idx] > seq[idx - 1] + tol:
            return Verdict(False, f"cost rose at index {idx}: {seq[idx - 1]:.9f} -> {seq[idx]:.9f}", idx)
    if lower_bound is not None and seq[-1] < lower_bound - tol:
        return Verdict(False, f"final cost {seq[-1]:.9f} below the optimum {lower_bound:.9f}", len(seq) - 1)
    return Verdict(True)
