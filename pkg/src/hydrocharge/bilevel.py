"""Bi-level iteration for one time step.

Alternates the two exact sub-solvers: with the dispatch fixed, the assignment
is re-optimized by matching; with the assignment fixed, the dispatch is
re-optimized by the LP. Stops once a full round changes the step cost by no
more than ``epsilon``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dispatch import optimal_dispatch
from .ev_cost import (
    NEXT,
    NOW,
    Assignment,
    CostBreakdown,
    StepProblem,
    empty_assignment,
    station_prices,
    step_objective,
    zero_dispatch,
)
from .matching import best_assignment, gamma_bound

MONOTONE_TOL = 1e-6
VERTEX_TOL = 1e-9


class MonotonicityError(RuntimeError):
    pass


class PenaltyBelowBoundWarning(UserWarning):
    pass


@dataclass
class IterationTrace:
    initial: float
    rows: list = field(default_factory=list)  # (iteration, J after matching, J after LP)
    converged: bool = False
    seeds: int = 0  # dispatch vertices scored before iterating

    @property
    def iterations(self) -> int:
        return len(self.rows)

    @property
    def sequence(self) -> list:
        """Every recorded cost in order, starting from the initial point."""
        seq = [self.initial]
        for _, j_km, j_lp in self.rows:
            seq += [j_km, j_lp]
        return seq

    @property
    def final(self) -> float:
        return self.rows[-1][2] if self.rows else self.initial


@dataclass
class StepSolution:
    assignment: Assignment
    H: np.ndarray
    J: float
    breakdown: CostBreakdown
    trace: IterationTrace

    @property
    def served(self) -> int:
        return sum(slot is not None for slot in self.assignment)


def random_start(problem: StepProblem, rng: np.random.Generator) -> tuple[Assignment, np.ndarray]:
    """A random feasible (assignment, dispatch) pair."""
    now = [s.available for s in problem.stations]
    nxt = [s.departing for s in problem.stations]
    assignment = [None] * problem.n_requests
    for j in rng.permutation(problem.n_requests):
        options = [None]
        for i in range(problem.n_fcs):
            if problem.reach[i, j]:
                if now[i]:
                    options.append((i, NOW))
                if nxt[i]:
                    options.append((i, NEXT))
        pick = options[rng.integers(len(options))]
        if pick is not None:
            i, kind = pick
            (now if kind == NOW else nxt)[i] -= 1
        assignment[j] = pick
    H = zero_dispatch(problem)
    for k, hps in enumerate(problem.hps):
        targets = np.nonzero(problem.supply[k])[0]
        if targets.size == 0 or hps.p_hydrogen <= 0:
            continue
        share = rng.dirichlet(np.ones(targets.size)) * rng.uniform(0, 1) * hps.p_hydrogen
        H[k, targets] = share
    return tuple(assignment), H


def _augment_into(F, resid, supply, target, cap_left) -> float:
    """Push flow into station ``target`` along augmenting paths.

    Paths run HPS -> station forward and station -> HPS backward along
    existing flow, so stations already served keep their totals.
    """
    n_h, n_s = F.shape
    pushed = 0.0
    while cap_left - pushed > VERTEX_TOL:
        # BFS over (kind, index) nodes from every HPS with spare supply
        parent = {}
        queue = [("h", k) for k in range(n_h) if resid[k] > VERTEX_TOL]
        for node in queue:
            parent[node] = None
        found = None
        head = 0
        while head < len(queue) and found is None:
            kind, x = queue[head]
            head += 1
            if kind == "h":
                for i in range(n_s):
                    if supply[x, i] and ("s", i) not in parent:
                        parent[("s", i)] = ("h", x)
                        if i == target:
                            found = ("s", i)
                            break
                        queue.append(("s", i))
            else:
                for k in range(n_h):
                    if F[k, x] > VERTEX_TOL and ("h", k) not in parent:
                        parent[("h", k)] = ("s", x)
                        queue.append(("h", k))
        if found is None:
            break
        path = [found]
        while parent[path[-1]] is not None:
            path.append(parent[path[-1]])
        path.reverse()  # h, s, h, s, ..., s(target)
        amount = min(resid[path[0][1]], cap_left - pushed)
        for a in range(1, len(path) - 1, 2):
            s_node, h_node = path[a], path[a + 1]
            amount = min(amount, F[h_node[1], s_node[1]])
        resid[path[0][1]] -= amount
        for a in range(0, len(path) - 1, 2):
            F[path[a][1], path[a + 1][1]] += amount
            if a + 2 < len(path):
                F[path[a + 2][1], path[a + 1][1]] -= amount
        pushed += amount
    return pushed


def dispatch_vertices(problem: StepProblem, limit: int = 5000) -> list:
    """Greedy dispatch vertices, one per ordered set of stations.

    For a fixed assignment the optimal dispatch fills stations in decreasing
    order of marginal saving, each up to full hydrogen coverage. Enumerating
    every order therefore yields a set that contains an optimal dispatch for
    any assignment. Requires a common delivery cost across HPSs. Returns
    ``None`` when the set would exceed ``limit``.
    """
    n_h, n_s = problem.n_hps, problem.n_fcs
    zero = zero_dispatch(problem)
    if n_h == 0:
        return [zero]
    cover = np.array([(s.base_load * problem.delta + s.demand) / problem.delta for s in problem.stations])
    supply = problem.supply
    fed = [i for i in range(n_s) if supply[:, i].any()]
    out = {tuple(np.zeros(n_s)): zero}

    def rec(F, resid, used):
        if len(out) > limit:
            return
        for i in fed:
            if i in used:
                continue
            F2, resid2 = F.copy(), resid.copy()
            if _augment_into(F2, resid2, supply, i, cover[i]) <= VERTEX_TOL:
                continue  # same vertex as the order without this station
            key = tuple(np.round(F2.sum(axis=0), 9))
            out.setdefault(key, F2)
            rec(F2, resid2, used | {i})

    rec(zero.copy(), np.array([h.p_hydrogen for h in problem.hps], dtype=float), frozenset())
    if len(out) > limit:
        return None
    return list(out.values())


def _common_delivery_cost(problem: StepProblem) -> bool:
    costs = {h.delivery for h in problem.hps}
    return len(costs) <= 1


def seeded_start(problem: StepProblem, limit: int = 5000) -> tuple[Assignment, np.ndarray, int]:
    """Best (matching, dispatch) pair over the greedy dispatch vertices."""
    vertices = dispatch_vertices(problem, limit) if _common_delivery_cost(problem) else None
    if vertices is None:
        raise ValueError("dispatch vertex enumeration is unavailable for this step")
    best = None
    seen = {}
    for H in vertices:
        prices = station_prices(problem, H)
        key = tuple(np.round(prices, 12))
        if key not in seen:
            seen[key] = best_assignment(problem, prices).assignment
        G = seen[key]
        J = step_objective(G, H, problem, check=False).total
        if best is None or J < best[2] - 1e-12:
            best = (G, H, J)
    return best[0], best[1], len(vertices)


def optimize_step(
    problem: StepProblem,
    epsilon: float = 2.0,
    max_iter: int = 50,
    init: str = "vertices",
    rng: Optional[np.random.Generator] = None,
    start: Optional[tuple] = None,
) -> StepSolution:
    """Bi-level iteration for one step.

    ``init`` picks the starting pair: ``"vertices"`` (best matching over all
    greedy dispatch vertices, which makes the result the joint optimum),
    ``"zero"`` (no dispatch, nobody assigned), or ``"random"`` (a random
    feasible pair drawn from ``rng``). ``start`` overrides with an explicit
    ``(assignment, H)`` pair.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    bound = gamma_bound(problem)
    guaranteed = problem.consts.penalty >= bound
    if not guaranteed:
        warnings.warn(
            f"penalty {problem.consts.penalty:g} is below the bound {bound:g}",
            PenaltyBelowBoundWarning,
            stacklevel=2,
        )
    seeds = 0
    if start is not None:
        G0, H0 = start
    elif init == "vertices":
        try:
            G0, H0, seeds = seeded_start(problem)
        except ValueError:
            G0, H0 = empty_assignment(problem), zero_dispatch(problem)
    elif init == "random":
        G0, H0 = random_start(problem, rng if rng is not None else np.random.default_rng())
    elif init == "zero":
        G0, H0 = empty_assignment(problem), zero_dispatch(problem)
    else:
        raise ValueError(f"unknown init {init!r}")

    J0 = step_objective(G0, H0, problem).total
    trace = IterationTrace(initial=J0, seeds=seeds)
    prev = J0
    for it in range(1, max_iter + 1):
        G1 = best_assignment(problem, station_prices(problem, H0)).assignment
        J1 = step_objective(G1, H0, problem).total
        # the first matching may raise the cardinality; only then can J grow
        if J1 > prev + MONOTONE_TOL and (guaranteed or it > 1):
            raise MonotonicityError(f"matching raised J from {prev:.9f} to {J1:.9f} at iteration {it}")
        H1 = optimal_dispatch(G1, problem).H
        J2 = step_objective(G1, H1, problem).total
        if J2 > J1 + MONOTONE_TOL:
            raise MonotonicityError(f"dispatch raised J from {J1:.9f} to {J2:.9f} at iteration {it}")
        trace.rows.append((it, J1, J2))
        G0, H0 = G1, H1
        delta_j = abs(J2 - J0)
        J0 = prev = J2
        if delta_j <= epsilon:
            trace.converged = True
            break
    breakdown = step_objective(G0, H0, problem)
    return StepSolution(G0, H0, breakdown.total, breakdown, trace)
