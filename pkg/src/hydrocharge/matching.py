"""Lower level: EV-to-pile assignment as maximum-weight bipartite matching.

Each station contributes one supply node per free pile (``now``) and one per
pile released at the next step (``next``). Edge costs are turned into
positive weights ``max(M) - M + 1``; a per-edge constant larger than any
achievable weight gap makes the maximum-weight matching also a
maximum-cardinality one, so serving more EVs always wins.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ev_cost import NEXT, NOW, Assignment, StepProblem, assignment_matrix, edge_components

KIND_NAMES = {NOW: "now", NEXT: "next"}


@dataclass
class ExtendedBipartiteGraph:
    supply_nodes: list  # (fcs, kind)
    demand_nodes: list  # request indices
    edges: list  # (supply index, demand index, M, O)
    n_fcs: int = 0

    @property
    def total_slots(self) -> int:
        return len(self.supply_nodes)


@dataclass
class AssignmentResult:
    assignment: Assignment
    G: np.ndarray
    unmatched: list
    matched_cost: float
    slots: dict = field(default_factory=dict)  # demand index -> supply index


def edge_cost(req, fcs: int, kind: int, prices, consts, delta: float) -> float:
    """Potential total cost M of serving ``req`` at ``fcs``: EV cost, pile
    maintenance and, for a next-step pile, one step of waiting."""
    return edge_components(req, fcs, prices[fcs], consts, delta, kind).total


def transform_weights(costs) -> np.ndarray:
    costs = np.asarray(costs, dtype=float)
    if costs.size == 0:
        return costs.copy()
    return costs.max() - costs + 1.0


def gamma_bound(problem: StepProblem) -> float:
    """Smallest penalty for which serving more EVs is never worse."""
    n = problem.n_requests
    cap = min(problem.total_slots, n)
    if n == 0 or cap == 0:
        return 0.0
    worst = 0.0
    for j, req in enumerate(problem.requests):
        for i in range(problem.n_fcs):
            if problem.reach[i, j]:
                e = edge_components(req, i, problem.tou, problem.consts, problem.delta, NEXT)
                worst = max(worst, e.total)
    return worst * cap


def build_graph(problem: StepProblem, prices, compact: bool = True) -> ExtendedBipartiteGraph:
    """Extended bipartite graph under fixed station ``prices``.

    With ``compact`` each station/kind keeps at most one supply node per
    request, which never changes the optimum since such nodes are identical.
    """
    n = problem.n_requests
    supply = []
    for i, s in enumerate(problem.stations):
        now, nxt = s.available, s.departing
        if compact:
            now, nxt = min(now, n), min(nxt, n)
        supply += [(i, NOW)] * now + [(i, NEXT)] * nxt
    raw = []
    cache = {}
    for si, (i, kind) in enumerate(supply):
        for j, req in enumerate(problem.requests):
            if not problem.reach[i, j]:
                continue
            key = (i, kind, j)
            if key not in cache:
                cache[key] = edge_cost(req, i, kind, prices, problem.consts, problem.delta)
            raw.append((si, j, cache[key]))
    weights = transform_weights([m for _, _, m in raw])
    edges = [(si, j, float(m), float(o)) for (si, j, m), o in zip(raw, weights)]
    return ExtendedBipartiteGraph(
        supply_nodes=supply, demand_nodes=list(range(n)), edges=edges, n_fcs=problem.n_fcs
    )


def hungarian(cost: np.ndarray) -> np.ndarray:
    """Min-cost assignment of every row to a distinct column (rows <= cols).

    ``inf`` entries are forbidden. Returns the column chosen for each row.
    Potentials-based augmenting paths, O(rows^2 * cols).
    """
    n, m = cost.shape
    if n > m:
        raise ValueError("need at least as many columns as rows")
    INF = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=int)  # p[col] = row (1-based), 0 = free
    way = np.zeros(m + 1, dtype=int)
    a = np.full((n + 1, m + 1), INF)
    a[1:, 1:] = cost
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, INF)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            cur = a[i0, 1:] - u[i0] - v[1:]
            free = ~used[1:]
            better = free & (cur < minv[1:])
            idx = np.nonzero(better)[0] + 1
            minv[idx] = cur[idx - 1]
            way[idx] = j0
            cand = np.where(free, minv[1:], INF)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            if not np.isfinite(delta):
                raise ValueError(f"row {i - 1} has no admissible column")
            used_idx = np.nonzero(used)[0]
            u[p[used_idx]] += delta
            v[used_idx] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    out = np.full(n, -1, dtype=int)
    for j in range(1, m + 1):
        if p[j]:
            out[p[j] - 1] = j - 1
    return out


def solve_matching(graph: ExtendedBipartiteGraph) -> AssignmentResult:
    """Maximum-cardinality matching of maximum total weight."""
    n = len(graph.demand_nodes)
    A = graph.total_slots
    assignment = [None] * n
    G = np.zeros((graph.n_fcs, n), dtype=np.int8)
    if n == 0 or not graph.edges:
        return AssignmentResult(tuple(assignment), G, list(range(n)), 0.0)
    max_o = max(o for *_, o in graph.edges)
    bonus = A * max_o + 1.0
    cost = np.full((n, A + n), np.inf)
    cost[:, A:] = 0.0  # staying unmatched
    m_of = {}
    for si, j, m, o in graph.edges:
        cost[j, si] = -(o + bonus)
        m_of[(si, j)] = m
    cols = hungarian(cost)
    matched_cost = 0.0
    slots = {}
    for j, si in enumerate(cols):
        if si < A:
            i, kind = graph.supply_nodes[si]
            assignment[j] = (i, kind)
            G[i, j] = 1
            matched_cost += m_of[(si, j)]
            slots[j] = int(si)
    unmatched = [j for j in range(n) if assignment[j] is None]
    return AssignmentResult(tuple(assignment), G, unmatched, matched_cost, slots)


def best_assignment(problem: StepProblem, prices) -> AssignmentResult:
    return solve_matching(build_graph(problem, prices))


def graph_to_text(graph: ExtendedBipartiteGraph) -> str:
    lines = ["# extended bipartite graph", f"fcs {graph.n_fcs}"]
    for s, (i, kind) in enumerate(graph.supply_nodes):
        lines.append(f"supply {s} {i} {KIND_NAMES[kind]}")
    for j in graph.demand_nodes:
        lines.append(f"demand {j}")
    for s, j, m, o in graph.edges:
        lines.append(f"edge {s} {j} {float(m)!r} {float(o)!r}")
    return "\n".join(lines) + "\n"


def graph_from_text(text: str) -> ExtendedBipartiteGraph:
    kinds = {v: k for k, v in KIND_NAMES.items()}
    supply, demand, edges, n_fcs = {}, [], [], 0
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tag, *rest = line.split()
        try:
            if tag == "fcs":
                n_fcs = int(rest[0])
            elif tag == "supply":
                supply[int(rest[0])] = (int(rest[1]), kinds[rest[2]])
            elif tag == "demand":
                demand.append(int(rest[0]))
            elif tag == "edge":
                edges.append((int(rest[0]), int(rest[1]), float(rest[2]), float(rest[3])))
            else:
                raise ValueError(f"unknown record {tag!r}")
        except (IndexError, KeyError, ValueError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    nodes = [supply[s] for s in sorted(supply)]
    return ExtendedBipartiteGraph(nodes, demand, edges, n_fcs)


__all__ = [
    "AssignmentResult", "ExtendedBipartiteGraph", "assignment_matrix", "best_assignment",
    "build_graph", "edge_cost", "gamma_bound", "graph_from_text", "graph_to_text",
    "hungarian", "solve_matching", "transform_weights",
]
