"""Road graph, shortest distances and the two reachability matrices.

Distances are in km. EVs and tankers sit on network nodes; the assignment
matrix ``R`` (FCS x EV) and the supply matrix ``L`` (HPS x FCS) are derived
from shortest-path distances with an inclusive radius test.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

NodeId = Hashable


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class RoadNetwork:
    nodes: tuple
    arcs: tuple  # (a, b, km), undirected
    fcs_nodes: tuple  # FCS index -> node id
    hps_nodes: tuple = ()  # HPS index -> node id
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "arcs", tuple((a, b, float(km)) for a, b, km in self.arcs))
        object.__setattr__(self, "fcs_nodes", tuple(self.fcs_nodes))
        object.__setattr__(self, "hps_nodes", tuple(self.hps_nodes))
        index = {n: k for k, n in enumerate(self.nodes)}
        if len(index) != len(self.nodes):
            raise NetworkError("duplicate node ids")
        object.__setattr__(self, "_index", index)
        for a, b, km in self.arcs:
            if a not in index or b not in index:
                raise NetworkError(f"arc ({a}, {b}) references an unknown node")
            if not km > 0:
                raise NetworkError(f"arc ({a}, {b}) has non-positive length {km}")
        for label, placed in (("FCS", self.fcs_nodes), ("HPS", self.hps_nodes)):
            for k, n in enumerate(placed):
                if n not in index:
                    raise NetworkError(f"{label} {k} placed at unknown node {n!r}")
        if self.nodes and not np.all(np.isfinite(self.distances)):
            raise NetworkError("road network is not connected")

    def index_of(self, node: NodeId) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise NetworkError(f"unknown node {node!r}") from None

    @cached_property
    def distances(self) -> np.ndarray:
        """All-pairs shortest distances, indexed by node position."""
        n = len(self.nodes)
        if n == 0:
            return np.zeros((0, 0))
        # parallel arcs: keep the shortest one
        best: dict[tuple[int, int], float] = {}
        for a, b, km in self.arcs:
            r, c = sorted((self._index[a], self._index[b]))
            best[(r, c)] = min(km, best.get((r, c), np.inf))
        rows = [r for r, _ in best]
        cols = [c for _, c in best]
        graph = csr_matrix((list(best.values()), (rows, cols)), shape=(n, n))
        return dijkstra(graph, directed=False)

    @property
    def n_fcs(self) -> int:
        return len(self.fcs_nodes)

    @property
    def n_hps(self) -> int:
        return len(self.hps_nodes)


def shortest_distance(net: RoadNetwork, a: NodeId, b: NodeId) -> float:
    d = float(net.distances[net.index_of(a), net.index_of(b)])
    if not np.isfinite(d):
        raise NetworkError(f"no path between {a!r} and {b!r}")
    return d


def fcs_distances(net: RoadNetwork, node: NodeId) -> np.ndarray:
    """Distance from ``node`` to every FCS, in FCS index order."""
    row = net.distances[net.index_of(node)]
    return np.array([row[net.index_of(f)] for f in net.fcs_nodes], dtype=float)


def hps_fcs_distances(net: RoadNetwork) -> np.ndarray:
    """The D matrix: HPS x FCS shortest distances."""
    return np.array([fcs_distances(net, h) for h in net.hps_nodes], dtype=float).reshape(
        net.n_hps, net.n_fcs
    )


def ev_reachability(
    net: RoadNetwork, ev_positions: Sequence[NodeId], v, delta: float
) -> np.ndarray:
    """R matrix (FCS x EV): 1 where the FCS lies within ``v_j * delta`` km."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    speeds = np.broadcast_to(np.asarray(v, dtype=float), (len(ev_positions),))
    if np.any(speeds <= 0):
        raise ValueError("EV speeds must be positive")
    R = np.zeros((net.n_fcs, len(ev_positions)), dtype=np.int8)
    for j, pos in enumerate(ev_positions):
        R[:, j] = fcs_distances(net, pos) <= speeds[j] * delta
    return R


def supply_matrix(net: RoadNetwork, v_h: float, delta: float) -> np.ndarray:
    """L matrix (HPS x FCS): 1 where a tanker covers the distance within one step."""
    if v_h <= 0 or delta <= 0:
        raise ValueError("tanker speed and delta must be positive")
    return (hps_fcs_distances(net) <= v_h * delta).astype(np.int8)


def network_from_dict(doc: dict) -> RoadNetwork:
    """Build a network from the ``network`` section of a scenario config."""
    try:
        nodes = list(doc["nodes"])
        arcs = [(a, b, km) for a, b, km in doc["arcs"]]
        fcs = list(doc["fcs_nodes"])
        hps = list(doc.get("hps_nodes", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise NetworkError(f"malformed network section: {exc}") from exc
    return RoadNetwork(nodes=nodes, arcs=arcs, fcs_nodes=fcs, hps_nodes=hps)


def network_to_dict(net: RoadNetwork) -> dict:
    return {
        "nodes": list(net.nodes),
        "arcs": [[a, b, km] for a, b, km in net.arcs],
        "fcs_nodes": list(net.fcs_nodes),
        "hps_nodes": list(net.hps_nodes),
    }
