"""Directed graphs, Kahn's sorting, and cycle elimination by weakest edge.

The elimination loop alternates two moves until the graph is empty: when
root nodes exist, they are appended to the output queue (ascending index
within a round) and deleted together with their outgoing edges; when none
exist, the single weakest edge of the remaining subgraph is removed and the
loop retries.  Weakness is the edge p-value; ties break by smaller
coefficient magnitude, then lexicographic (i, j).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import ZERO_THRESHOLD, CoefMatrix
from .exceptions import ArgumentError

Edge = tuple[int, int]


@dataclass(frozen=True)
class DirectedGraph:
    p: int
    edges: frozenset

    def __post_init__(self):
        object.__setattr__(
            self, "edges", frozenset((int(i), int(j)) for i, j in self.edges)
        )
        for i, j in self.edges:
            if i == j:
                raise ArgumentError(f"self-loop {i} -> {j} not allowed")
            if not (0 <= i < self.p and 0 <= j < self.p):
                raise ArgumentError(f"edge ({i}, {j}) out of range for p={self.p}")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def parents(self, j: int) -> list[int]:
        return sorted(i for i, k in self.edges if k == j)


@dataclass(frozen=True)
class TopoResult:
    order: tuple[int, ...]
    removed_edges: tuple[Edge, ...]
    dag: DirectedGraph


def graph_from_coefs(b: CoefMatrix, threshold: float = ZERO_THRESHOLD) -> DirectedGraph:
    """Edge i -> j wherever |b[i, j]| exceeds ``threshold``."""
    if threshold < 0:
        raise ArgumentError(f"threshold must be nonnegative, got {threshold}")
    idx = np.argwhere(np.abs(b.b) > threshold)
    return DirectedGraph(b.p, frozenset((int(i), int(j)) for i, j in idx))


def is_dag(g: DirectedGraph) -> bool:
    """True iff Kahn's procedure empties the graph without lacking a root."""
    indeg = [0] * g.p
    children: list[list[int]] = [[] for _ in range(g.p)]
    for i, j in g.edges:
        indeg[j] += 1
        children[i].append(j)
    stack = [v for v in range(g.p) if indeg[v] == 0]
    seen = 0
    while stack:
        v = stack.pop()
        seen += 1
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                stack.append(c)
    return seen == g.p


def kahn_eliminate(
    g: DirectedGraph,
    edge_weakness: Mapping[Edge, float],
    edge_strength: Mapping[Edge, float] | None = None,
) -> TopoResult:
    """Sort nodes topologically, removing weakest edges to break cycles.

    ``edge_weakness`` must cover every edge of ``g`` (larger = weaker, i.e.
    a p-value).  ``edge_strength`` optionally supplies |coefficient| values
    used to break weakness ties (smaller goes first).
    """
    missing = [e for e in g.edges if e not in edge_weakness]
    if missing:
        raise ArgumentError(f"edge_weakness missing entry for edge {min(missing)}")

    live_nodes = set(range(g.p))
    live_edges = set(g.edges)
    order: list[int] = []
    removed: list[Edge] = []

    while live_nodes:
        with_parent = {j for _, j in live_edges}
        roots = sorted(v for v in live_nodes if v not in with_parent)
        if roots:
            order.extend(roots)
            root_set = set(roots)
            live_edges = {(i, j) for i, j in live_edges if i not in root_set}
            live_nodes -= root_set
        else:
            weakest = _weakest_edge(live_edges, edge_weakness, edge_strength)
            live_edges.remove(weakest)
            removed.append(weakest)

    dag = DirectedGraph(g.p, g.edges - set(removed))
    return TopoResult(tuple(order), tuple(removed), dag)


def _weakest_edge(edges, weakness, strength) -> Edge:
    top = max(weakness[e] for e in edges)
    tied = [e for e in edges if weakness[e] == top]
    if len(tied) > 1 and strength is not None:
        low = min(strength[e] for e in tied)
        tied = [e for e in tied if strength[e] == low]
    return min(tied)


def edge_list_text(g: DirectedGraph) -> str:
    """Edge-list export, one ``i -> j`` per line with 1-based node labels."""
    return "".join(f"{i + 1} -> {j + 1}\n" for i, j in sorted(g.edges))


def adjacency_matrix(g: DirectedGraph) -> np.ndarray:
    adj = np.zeros((g.p, g.p), dtype=int)
    for i, j in g.edges:
        adj[i, j] = 1
    return adj


def write_edge_list(g: DirectedGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(edge_list_text(g))


def write_adjacency_csv(g: DirectedGraph, path) -> None:
    np.savetxt(path, adjacency_matrix(g), fmt="%d", delimiter=",")
