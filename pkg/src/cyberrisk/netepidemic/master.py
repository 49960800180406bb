"""Exact state-distribution dynamics of the spread chain (master equation).

The Kolmogorov forward equations are solved over the full configuration
space (2^N states for SIS, 3^N for SIR) by applying the action of the
matrix exponential of the sparse rate matrix between grid times, which is
accurate to machine precision and conserves probability mass.  State-space
caps keep memory bounded; this is an oracle for small test graphs, not a
production solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import expm_multiply

from ..core import ModelError
from .graphs import Graph
from .spread import I, R, S, SpreadParams, SpreadState

__all__ = ["MasterSolution", "exact_master"]

_MAX_SIS_NODES = 12
_MAX_SIR_NODES = 8


@dataclass(frozen=True)
class MasterSolution:
    """Distribution trajectory with node-level marginals extracted."""

    t_grid: np.ndarray
    infected: np.ndarray  # (T, N)
    susceptible: np.ndarray  # (T, N)
    distribution: np.ndarray  # (T, n_states)
    model: str


def _sis_rate_matrix(graph: Graph, params: SpreadParams) -> sparse.csr_matrix:
    n = graph.n_nodes
    eps = params.epsilon_vector(n)
    size = 1 << n
    rows, cols, vals = [], [], []
    for s in range(size):
        out = 0.0
        for i in range(n):
            if (s >> i) & 1:
                rate = params.gamma
                target = s & ~(1 << i)
            else:
                k = sum(1 for j in graph.neighbors(i) if (s >> j) & 1)
                rate = params.tau * k + eps[i]
                target = s | (1 << i)
            if rate > 0.0:
                rows.append(s)
                cols.append(target)
                vals.append(rate)
                out += rate
        rows.append(s)
        cols.append(s)
        vals.append(-out)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(size, size))


def _sir_rate_matrix(graph: Graph, params: SpreadParams) -> sparse.csr_matrix:
    n = graph.n_nodes
    eps = params.epsilon_vector(n)
    powers = 3 ** np.arange(n)
    size = 3**n
    rows, cols, vals = [], [], []
    for s in range(size):
        digits = (s // powers) % 3
        out = 0.0
        for i in range(n):
            if digits[i] == I:
                rate = params.gamma
                target = s + (R - I) * powers[i]
            elif digits[i] == S:
                k = int(np.sum(digits[graph.neighbors(i)] == I))
                rate = params.tau * k + eps[i]
                target = s + (I - S) * powers[i]
            else:
                continue
            if rate > 0.0:
                rows.append(s)
                cols.append(int(target))
                vals.append(rate)
                out += rate
        rows.append(s)
        cols.append(s)
        vals.append(-out)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(size, size))


def _initial_vector(init, n: int, model: str, size: int) -> np.ndarray:
    if isinstance(init, SpreadState):
        init.check_model(model)
        if init.compartments.size != n:
            raise ValueError("initial state size does not match the graph")
        if model == "SIS":
            idx = int(np.sum((init.compartments == I) * (1 << np.arange(n))))
        else:
            idx = int(np.sum(init.compartments.astype(int) * 3 ** np.arange(n)))
        p0 = np.zeros(size)
        p0[idx] = 1.0
        return p0
    p0 = np.asarray(init, dtype=float)
    if p0.shape != (size,):
        raise ValueError("initial distribution has wrong length")
    if np.any(p0 < 0) or not np.isclose(p0.sum(), 1.0, atol=1e-12):
        raise ValueError("initial distribution must be a probability vector")
    return p0


def exact_master(
    graph: Graph,
    params: SpreadParams,
    init,
    t_grid,
) -> MasterSolution:
    """Solve the forward equations exactly; init is a SpreadState or a vector."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("time grid must be strictly increasing and nonempty")
    if np.any(t_grid < 0):
        raise ValueError("grid times must be nonnegative")
    n = graph.n_nodes
    if params.model == "SIS":
        if n > _MAX_SIS_NODES:
            raise ModelError(f"state-space cap exceeded (SIS limit {_MAX_SIS_NODES})")
        q = _sis_rate_matrix(graph, params)
        size = 1 << n
        codes = ((np.arange(size)[:, None] >> np.arange(n)) & 1).astype(np.int8)
        codes = np.where(codes == 1, I, S)
    else:
        if n > _MAX_SIR_NODES:
            raise ModelError(f"state-space cap exceeded (SIR limit {_MAX_SIR_NODES})")
        q = _sir_rate_matrix(graph, params)
        size = 3**n
        codes = ((np.arange(size)[:, None] // 3 ** np.arange(n)) % 3).astype(np.int8)

    generator = q.T.tocsc()
    p = _initial_vector(init, n, params.model, size)
    dist = np.empty((t_grid.size, size))
    t_prev = 0.0
    for k, t in enumerate(t_grid):
        if t > t_prev:
            p = expm_multiply(generator * (t - t_prev), p)
        dist[k] = p
        t_prev = t
    infected = dist @ (codes == I)
    susceptible = dist @ (codes == S)
    return MasterSolution(
        t_grid=t_grid,
        infected=infected,
        susceptible=susceptible,
        distribution=dist,
        model=params.model,
    )
