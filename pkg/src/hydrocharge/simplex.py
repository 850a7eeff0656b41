"""Dense two-phase tableau simplex with Bland's rule.

Solves ``min c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq``
and ``x >= 0``. Meant for the small dispatch programs built each step, where
exact vertex solutions and reproducible pivoting matter more than speed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-10
COST_TOL = 1e-10


class LpError(RuntimeError):
    pass


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    status: str  # "optimal" | "infeasible" | "unbounded"
    iterations: int = 0


def _pivot(T: np.ndarray, basis: list, row: int, col: int) -> None:
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]
    basis[row] = col


def _run(T: np.ndarray, basis: list, allowed: int, max_iter: int) -> tuple[str, int]:
    """Pivot on the tableau whose last row holds reduced costs.

    Only the first ``allowed`` columns may enter the basis.
    """
    m = T.shape[0] - 1
    for it in range(max_iter):
        cost = T[-1, :allowed]
        entering = next((j for j in range(allowed) if cost[j] < -COST_TOL), None)
        if entering is None:
            return "optimal", it
        column = T[:m, entering]
        best, leave = np.inf, None
        for r in range(m):
            if column[r] > PIVOT_TOL:
                ratio = T[r, -1] / column[r]
                # Bland: ties go to the smallest basic variable index
                if ratio < best - 1e-12 or (
                    abs(ratio - best) <= 1e-12 and leave is not None and basis[r] < basis[leave]
                ):
                    best, leave = ratio, r
        if leave is None:
            return "unbounded", it
        _pivot(T, basis, leave, entering)
    raise LpError(f"simplex did not terminate within {max_iter} pivots")


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_iter: int = 10_000) -> LpSolution:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # columns: x | slacks (one per <= row) | artificials (as needed)
    rows = np.vstack([A_ub, A_eq]) if m else np.zeros((0, n))
    rhs = np.concatenate([b_ub, b_eq])
    slack = np.zeros((m, m_ub))
    slack[np.arange(m_ub), np.arange(m_ub)] = 1.0
    sign = np.where(rhs < 0, -1.0, 1.0)
    rows = rows * sign[:, None]
    slack = slack * sign[:, None]
    rhs = rhs * sign

    need_art = [r for r in range(m) if not (r < m_ub and sign[r] > 0)]
    n_art = len(need_art)
    width = n + m_ub + n_art
    T = np.zeros((m + 1, width + 1))
    T[:m, :n] = rows
    T[:m, n : n + m_ub] = slack
    T[:m, -1] = rhs
    basis = [0] * m
    for r in range(m_ub):
        if sign[r] > 0:
            basis[r] = n + r
    for a, r in enumerate(need_art):
        T[r, n + m_ub + a] = 1.0
        basis[r] = n + m_ub + a

    iterations = 0
    if n_art:
        # phase I: minimize the sum of artificials
        T[-1, :] = 0.0
        T[-1, n + m_ub :width] = 1.0
        for r in need_art:
            T[-1] -= T[r]
        status, iterations = _run(T, basis, width, max_iter)
        if -T[-1, -1] > 1e-8:
            return LpSolution(np.zeros(n), np.inf, "infeasible", iterations)
        # drive remaining zero-level artificials out of the basis
        for r in range(m):
            if basis[r] >= n + m_ub:
                col = next(
                    (j for j in range(n + m_ub) if abs(T[r, j]) > PIVOT_TOL), None
                )
                if col is not None:
                    _pivot(T, basis, r, col)
        keep = [r for r in range(m) if basis[r] < n + m_ub]
        T = np.vstack([T[keep], T[-1:]])
        basis = [basis[r] for r in keep]
        T = np.delete(T, np.s_[n + m_ub : width], axis=1)
        width = n + m_ub
        m = len(keep)

    # phase II
    T[-1, :] = 0.0
    T[-1, :n] = c
    for r, b in enumerate(basis):
        if T[-1, b] != 0.0:
            T[-1] -= T[-1, b] * T[r]
    status, it2 = _run(T, basis, width, max_iter)
    iterations += it2
    x = np.zeros(width)
    for r, b in enumerate(basis):
        x[b] = T[r, -1]
    x = x[:n]
    if status != "optimal":
        return LpSolution(x, -np.inf, status, iterations)
    return LpSolution(x, float(c @ x), "optimal", iterations)
