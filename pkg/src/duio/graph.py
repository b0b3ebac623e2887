"""Undirected communication topology: adjacency, Laplacian, connectivity."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import Disconnected


@dataclass(frozen=True)
class Topology:
    """Simple undirected graph over nodes 0..node_count-1.

    Edges are stored as sorted, deduplicated (i, j) pairs with i < j;
    weights are binary.  Instances are immutable and freely shareable.
    """

    node_count: int
    edges: tuple = field(default=())

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be >= 1")
        seen = set()
        for e in self.edges:
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise ValueError(f"edge {e} out of range")
            seen.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.node_count, self.node_count))
        for i, j in self.edges:
            A[i, j] = A[j, i] = 1.0
        return A

    def neighbors(self, i: int) -> list:
        out = [j for a, j in self.edges if a == i]
        out += [a for a, j in self.edges if j == i]
        return sorted(out)


def degree(g: Topology, i: int) -> int:
    """Number of neighbors of node i."""
    return len(g.neighbors(i))


def degrees(g: Topology) -> np.ndarray:
    return g.adjacency().sum(axis=1)


def laplacian(g: Topology) -> np.ndarray:
    """L = D - A; symmetric positive semidefinite with zero row sums."""
    A = g.adjacency()
    return np.diag(A.sum(axis=1)) - A


def is_connected(g: Topology) -> bool:
    """True iff the graph has a single connected component (BFS)."""
    if g.node_count == 1:
        return True
    adj = [[] for _ in range(g.node_count)]
    for i, j in g.edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == g.node_count


def algebraic_connectivity(g: Topology) -> float:
    """Second-smallest Laplacian eigenvalue; requires a connected graph."""
    if not is_connected(g):
        raise Disconnected("graph is not connected")
    if g.node_count == 1:
        return 0.0
    ev = np.linalg.eigvalsh(laplacian(g))
    return float(ev[1])
