"""Undirected graphs and random-graph generators.

Graphs are stored as deduplicated sorted edge lists with cached neighbor
arrays; the dense adjacency matrix is only materialized for small graphs
(up to 256 nodes), larger ones fall back to a sparse representation.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from ..core import SeedStream

__all__ = ["Graph", "generate_er", "generate_ba", "generate_named"]

_DENSE_LIMIT = 256


class Graph:
    """Simple undirected graph: no self-loops, symmetric adjacency."""

    def __init__(self, n_nodes: int, edges: Iterable[tuple[int, int]]):
        if n_nodes < 1:
            raise ValueError("graph needs at least one node")
        self.n_nodes = int(n_nodes)
        cleaned = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError("self-loops are not allowed")
            if not (0 <= i < n_nodes and 0 <= j < n_nodes):
                raise ValueError("edge endpoint out of range")
            cleaned.add((min(i, j), max(i, j)))
        self.edges: tuple[tuple[int, int], ...] = tuple(sorted(cleaned))
        self._edge_set = frozenset(self.edges)
        nbrs: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        self._neighbors = tuple(np.array(sorted(v), dtype=int) for v in nbrs)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def neighbors(self, i: int) -> np.ndarray:
        return self._neighbors[i]

    def degrees(self) -> np.ndarray:
        return np.array([len(v) for v in self._neighbors])

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self._edge_set

    def adjacency(self):
        """Dense 0/1 matrix for small graphs, CSR above the dense limit."""
        if self.n_nodes <= _DENSE_LIMIT:
            a = np.zeros((self.n_nodes, self.n_nodes))
            for i, j in self.edges:
                a[i, j] = a[j, i] = 1.0
            return a
        return self._sparse_adjacency()

    def _sparse_adjacency(self) -> sparse.csr_matrix:
        if not self.edges:
            return sparse.csr_matrix((self.n_nodes, self.n_nodes))
        rows = [i for i, j in self.edges] + [j for i, j in self.edges]
        cols = [j for i, j in self.edges] + [i for i, j in self.edges]
        data = np.ones(len(rows))
        return sparse.csr_matrix(
            (data, (rows, cols)), shape=(self.n_nodes, self.n_nodes)
        )

    def is_connected(self) -> bool:
        seen = np.zeros(self.n_nodes, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            v = stack.pop()
            for w in self._neighbors[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(int(w))
        return bool(seen.all())

    def is_tree(self) -> bool:
        return self.edge_count == self.n_nodes - 1 and self.is_connected()

    def spectral_radius(self, tol: float = 1e-8, max_iter: int = 100_000) -> float:
        """Largest-magnitude adjacency eigenvalue by shifted power iteration.

        The shift by the maximum degree makes the dominant eigenvalue unique
        in magnitude (adjacency spectra of bipartite graphs are symmetric).
        """
        if self.edge_count == 0:
            return 0.0
        a = self._sparse_adjacency()
        shift = float(self.degrees().max())
        v = np.ones(self.n_nodes) / np.sqrt(self.n_nodes)
        mu_prev = np.inf
        for _ in range(max_iter):
            w = a @ v + shift * v
            norm = np.linalg.norm(w)
            if norm == 0.0:
                return 0.0
            v = w / norm
            mu = float(v @ (a @ v))
            if abs(mu - mu_prev) < tol:
                return mu
            mu_prev = mu
        return mu_prev

    def to_edge_list(self) -> str:
        lines = [str(self.n_nodes)]
        lines.extend(f"{i} {j}" for i, j in self.edges)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list(cls, text: str) -> "Graph":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty edge-list text")
        n = int(lines[0])
        edges = []
        for ln in lines[1:]:
            i, j = ln.split()
            edges.append((int(i), int(j)))
        return cls(n, edges)

    def __repr__(self) -> str:
        return f"Graph(n_nodes={self.n_nodes}, edges={self.edge_count})"


def generate_er(n: int, p: float, seed: SeedStream) -> Graph:
    """Erdos-Renyi graph: each of the n(n-1)/2 pairs linked with probability p."""
    if n < 1:
        raise ValueError("need n >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("edge probability must lie in [0, 1]")
    rng = seed.generator()
    edges = []
    for i in range(n - 1):
        hits = np.nonzero(rng.random(n - 1 - i) < p)[0]
        edges.extend((i, i + 1 + int(k)) for k in hits)
    return Graph(n, edges)


def generate_ba(n: int, m_attach: int, seed: SeedStream) -> Graph:
    """Preferential-attachment growth from a seed clique of m_attach + 1 nodes.

    Every new node attaches ``m_attach`` edges to distinct existing nodes
    chosen proportionally to degree, so the result is connected and has
    ``C(m+1, 2) + (n - m - 1) m`` edges.
    """
    if m_attach < 1 or n <= m_attach:
        raise ValueError("need n > m_attach >= 1")
    rng = seed.generator()
    m0 = m_attach + 1
    edges = [(i, j) for i in range(m0) for j in range(i + 1, m0)]
    # Each node appears in `repeated` once per unit of degree.
    repeated: list[int] = [v for e in edges for v in e]
    for v in range(m0, n):
        targets: set[int] = set()
        while len(targets) < m_attach:
            targets.add(repeated[int(rng.integers(len(repeated)))])
        for t in targets:
            edges.append((t, v))
            repeated.extend((t, v))
    return Graph(n, edges)


def generate_named(
    topology: str, n: int, branching: int | None = None
) -> Graph:
    """Deterministic canonical graphs: star, complete, path, isolated, tree."""
    if n < 1:
        raise ValueError("need n >= 1")
    if topology == "star":
        return Graph(n, [(0, i) for i in range(1, n)])
    if topology == "complete":
        return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])
    if topology == "path":
        return Graph(n, [(i, i + 1) for i in range(n - 1)])
    if topology == "isolated":
        return Graph(n, [])
    if topology == "tree":
        if branching is None or branching < 1:
            raise ValueError("tree topology needs branching >= 1")
        # Array-encoded b-ary tree: parent of node k >= 1 is (k - 1) // b.
        return Graph(n, [((k - 1) // branching, k) for k in range(1, n)])
    raise ValueError(
        f"unknown topology {topology!r}; "
        "expected star | complete | path | isolated | tree"
    )
