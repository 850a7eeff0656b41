"""Upper level: hydrogen dispatch as a linear program for a fixed assignment.

Variables are ``H[k, i]`` for every tanker-reachable (HPS, FCS) pair plus one
price-ratio variable per station. The clamped price ratio
``max(1 - h_i / B_i, 0)`` is written in epigraph form; this is exact because
its objective weight ``E_i * tou`` is never negative.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ev_cost import (
    LP_TOL,
    Assignment,
    StepProblem,
    check_assignment,
    edge_components,
    step_objective,
)
from .simplex import linprog


class DispatchError(RuntimeError):
    pass


@dataclass
class DispatchLp:
    names: list  # variable names, H first then price ratios
    h_index: list  # (k, i) for each H variable, in column order
    c: np.ndarray
    constant: float
    A_ub: np.ndarray
    b_ub: np.ndarray
    row_names: list
    n_hps: int
    n_fcs: int
    load: np.ndarray  # B_i, station load over the step (kWh)
    delta: float

    @property
    def n_vars(self) -> int:
        return self.c.size


@dataclass
class DispatchResult:
    H: np.ndarray
    objective: float
    status: str
    price_ratio: np.ndarray


def station_energy(problem: StepProblem, assignment: Assignment) -> np.ndarray:
    """E_i: potential demand of all EVs assigned to each station."""
    E = np.zeros(problem.n_fcs)
    for j, slot in enumerate(assignment):
        if slot is not None:
            i, kind = slot
            E[i] += edge_components(problem.requests[j], i, 0.0, problem.consts).energy
    return E


def build_lp(assignment: Assignment, problem: StepProblem) -> DispatchLp:
    check_assignment(problem, assignment)
    n_h, n_s, d = problem.n_hps, problem.n_fcs, problem.delta
    h_index = [(k, i) for k in range(n_h) for i in range(n_s) if problem.supply[k, i]]
    nh = len(h_index)
    n = nh + n_s
    names = [f"H_{k}_{i}" for k, i in h_index] + [f"r_{i}" for i in range(n_s)]

    E = station_energy(problem, assignment)
    c = np.zeros(n)
    for col, (k, i) in enumerate(h_index):
        c[col] = problem.hps[k].delivery
    c[nh:] = E * problem.tou

    # everything that does not move with H: J at zero price minus nothing
    base = step_objective(assignment, np.zeros((n_h, n_s)), problem, check=False)
    constant = base.total - base.charge - base.delivery

    load = np.array([s.base_load * d + s.demand for s in problem.stations], dtype=float)
    if np.any(load <= 0):
        raise DispatchError("station load over the step must be positive")
    A = np.zeros((n_s + n_h, n))
    b = np.zeros(n_s + n_h)
    rows = []
    for i in range(n_s):
        # r_i >= 1 - d * sum_k H[k, i] / B_i
        A[i, nh + i] = -1.0
        for col, (k, ii) in enumerate(h_index):
            if ii == i:
                A[i, col] = -d / load[i]
        b[i] = -1.0
        rows.append(f"price_{i}")
    for k in range(n_h):
        for col, (kk, _) in enumerate(h_index):
            if kk == k:
                A[n_s + k, col] = 1.0
        b[n_s + k] = problem.hps[k].p_hydrogen
        rows.append(f"supply_{k}")
    return DispatchLp(
        names=names, h_index=h_index, c=c, constant=constant, A_ub=A, b_ub=b,
        row_names=rows, n_hps=n_h, n_fcs=n_s, load=load, delta=d,
    )


def solve_lp(lp: DispatchLp) -> DispatchResult:
    sol = linprog(lp.c, A_ub=lp.A_ub, b_ub=lp.b_ub)
    if sol.status != "optimal":
        # H = 0 with unit price ratios is always feasible and the objective is bounded below
        raise DispatchError(f"dispatch LP reported {sol.status}")
    nh = len(lp.h_index)
    H = np.zeros((lp.n_hps, lp.n_fcs))
    for col, (k, i) in enumerate(lp.h_index):
        H[k, i] = max(sol.x[col], 0.0)
    # rows may exceed supply by round-off; scale back inside the bound
    for k in range(lp.n_hps):
        cap = lp.b_ub[lp.n_fcs + k]
        total = H[k].sum()
        if total > cap > 0:
            H[k] *= cap / total
        elif cap <= 0:
            H[k] = 0.0
    ratio = np.maximum(1.0 - lp.delta * H.sum(axis=0) / lp.load, 0.0)
    x = np.concatenate([[H[k, i] for k, i in lp.h_index], ratio])
    return DispatchResult(
        H=H, objective=float(lp.c @ x + lp.constant), status="optimal", price_ratio=ratio
    )


def optimal_dispatch(assignment: Assignment, problem: StepProblem) -> DispatchResult:
    return solve_lp(build_lp(assignment, problem))


def _term(coef: float, name: str, first: bool) -> str:
    sign = "-" if coef < 0 else ("" if first else "+")
    return f"{sign} {abs(coef):.12g} {name}".strip()


def lp_to_text(lp: DispatchLp) -> str:
    """CPLEX LP format; the objective constant is written as a comment."""
    out = ["\\ dispatch LP", f"\\ objective constant: {lp.constant:.12g}", "Minimize"]
    terms = [_term(v, n, k == 0) for k, (v, n) in enumerate((v, n) for v, n in zip(lp.c, lp.names) if v != 0)]
    out.append(" obj: " + (" ".join(terms) if terms else "0 " + lp.names[0] if lp.names else "0"))
    out.append("Subject To")
    for r, name in enumerate(lp.row_names):
        nz = [(lp.A_ub[r, j], lp.names[j]) for j in range(lp.n_vars) if lp.A_ub[r, j] != 0]
        lhs = " ".join(_term(v, n, k == 0) for k, (v, n) in enumerate(nz)) or "0 " + lp.names[0]
        out.append(f" {name}: {lhs} <= {lp.b_ub[r]:.12g}")
    out.append("Bounds")
    for n in lp.names:
        out.append(f" {n} >= 0")
    out.append("End")
    return "\n".join(out) + "\n"


def dispatch_satisfies_limits(problem: StepProblem, H: np.ndarray, tol: float = LP_TOL) -> bool:
    H = np.asarray(H)
    if np.any(H < -tol) or np.any(np.abs(H[problem.supply == 0]) > tol):
        return False
    return all(H[k].sum() <= problem.hps[k].p_hydrogen + tol for k in range(problem.n_hps))
