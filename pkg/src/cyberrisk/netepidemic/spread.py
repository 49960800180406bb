"""Markovian SIS/SIR spread on a graph via exact Gillespie simulation.

Two engines share the same transition rates: a single-run engine that
records the full event log (needed by the loss models), and a vectorized
batch engine that estimates node-level infection probabilities over many
replications at once, which is what the master-equation comparisons use.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from ..core import SeedStream
from .graphs import Graph

__all__ = [
    "S",
    "I",
    "R",
    "SpreadParams",
    "SpreadState",
    "SpreadLog",
    "BatchMarginals",
    "gillespie_spread",
    "gillespie_marginals",
]

S, I, R = 0, 1, 2
_CODE = {0: "S", 1: "I", 2: "R"}


@dataclass(frozen=True)
class SpreadParams:
    """Infection rate per infected neighbor, recovery rate, external rate."""

    tau: float
    gamma: float
    epsilon: float | tuple[float, ...] = 0.0
    model: str = "SIS"

    def __post_init__(self) -> None:
        if self.tau < 0:
            raise ValueError("infection rate tau must be nonnegative")
        if self.gamma <= 0:
            raise ValueError("recovery rate gamma must be positive")
        if self.model not in ("SIS", "SIR"):
            raise ValueError("model must be 'SIS' or 'SIR'")
        eps = self.epsilon
        if np.ndim(eps) == 0:
            if eps < 0:
                raise ValueError("external rate epsilon must be nonnegative")
        else:
            eps = tuple(float(e) for e in eps)
            if any(e < 0 for e in eps):
                raise ValueError("external rate epsilon must be nonnegative")
            object.__setattr__(self, "epsilon", eps)

    def epsilon_vector(self, n: int) -> np.ndarray:
        if np.ndim(self.epsilon) == 0:
            return np.full(n, float(self.epsilon))
        eps = np.asarray(self.epsilon, dtype=float)
        if eps.size != n:
            raise ValueError("per-node epsilon length mismatch")
        return eps


@dataclass(frozen=True)
class SpreadState:
    """Compartment vector (codes S=0, I=1, R=2) at a point in time."""

    compartments: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        comps = np.asarray(self.compartments, dtype=np.int8)
        if comps.ndim != 1:
            raise ValueError("compartments must be a vector")
        if np.any((comps < 0) | (comps > 2)):
            raise ValueError("compartment codes must be in {0, 1, 2}")
        object.__setattr__(self, "compartments", comps)

    @classmethod
    def from_infected(cls, n_nodes: int, infected, time: float = 0.0) -> "SpreadState":
        comps = np.zeros(n_nodes, dtype=np.int8)
        comps[list(infected)] = I
        return cls(compartments=comps, time=time)

    def check_model(self, model: str) -> None:
        if model == "SIS" and np.any(self.compartments == R):
            raise ValueError("R compartment only exists under SIR")


@dataclass(frozen=True)
class SpreadLog:
    """Event log of one spread realization, replayable to any time."""

    n_nodes: int
    model: str
    init: np.ndarray
    times: np.ndarray
    nodes: np.ndarray
    from_codes: np.ndarray
    to_codes: np.ndarray
    horizon: float

    def compartments_at(self, t: float) -> np.ndarray:
        state = self.init.copy()
        for k in range(self.times.size):
            if self.times[k] > t:
                break
            state[self.nodes[k]] = self.to_codes[k]
        return state

    def infected_at(self, t: float) -> np.ndarray:
        return self.compartments_at(t) == I

    def episodes(self, node: int) -> list[tuple[float, float, bool]]:
        """Infection episodes of a node: (start, end, truncated-at-horizon)."""
        out = []
        start = 0.0 if self.init[node] == I else None
        for k in range(self.times.size):
            if self.nodes[k] != node:
                continue
            if self.to_codes[k] == I:
                start = float(self.times[k])
            elif self.from_codes[k] == I and start is not None:
                out.append((start, float(self.times[k]), False))
                start = None
        if start is not None:
            out.append((start, self.horizon, True))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("time,node,from,to\n")
        for k in range(self.times.size):
            buf.write(
                f"{self.times[k]:.17g},{self.nodes[k]},"
                f"{_CODE[int(self.from_codes[k])]},{_CODE[int(self.to_codes[k])]}\n"
            )
        return buf.getvalue()


def _node_rates(
    states: np.ndarray,
    graph: Graph,
    params: SpreadParams,
    eps: np.ndarray,
) -> np.ndarray:
    infected = (states == I).astype(float)
    inf_neighbors = np.array(
        [infected[graph.neighbors(i)].sum() for i in range(graph.n_nodes)]
    )
    rates = np.where(states == I, params.gamma, 0.0)
    susceptible = states == S
    rates = rates + susceptible * (params.tau * inf_neighbors + eps)
    return rates


def gillespie_spread(
    graph: Graph,
    params: SpreadParams,
    init: SpreadState,
    horizon: float,
    seed: SeedStream,
) -> SpreadLog:
    """Exact continuous-time simulation of one spread path on [0, horizon]."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if init.compartments.size != graph.n_nodes:
        raise ValueError("initial state size does not match the graph")
    init.check_model(params.model)
    eps = params.epsilon_vector(graph.n_nodes)
    rng = seed.generator()
    states = init.compartments.copy()
    t = init.time
    times, nodes, froms, tos = [], [], [], []
    recovery_target = S if params.model == "SIS" else R
    while True:
        rates = _node_rates(states, graph, params, eps)
        total = float(rates.sum())
        if total <= 0.0:
            break  # absorbing state: empty remainder of the log, not an error
        t = t + rng.exponential(1.0 / total)
        if t > horizon:
            break
        pick = int(np.searchsorted(np.cumsum(rates), rng.uniform() * total))
        pick = min(pick, graph.n_nodes - 1)
        old = int(states[pick])
        new = recovery_target if old == I else I
        states[pick] = new
        times.append(t)
        nodes.append(pick)
        froms.append(old)
        tos.append(new)
    return SpreadLog(
        n_nodes=graph.n_nodes,
        model=params.model,
        init=init.compartments.copy(),
        times=np.array(times),
        nodes=np.array(nodes, dtype=int),
        from_codes=np.array(froms, dtype=np.int8),
        to_codes=np.array(tos, dtype=np.int8),
        horizon=horizon,
    )


@dataclass(frozen=True)
class BatchMarginals:
    """Monte Carlo node-state probabilities on a time grid."""

    t_grid: np.ndarray
    infected: np.ndarray  # (T, N)
    susceptible: np.ndarray  # (T, N)
    n_reps: int

    @property
    def infected_se(self) -> np.ndarray:
        p = self.infected
        return np.sqrt(p * (1.0 - p) / self.n_reps)


def gillespie_marginals(
    graph: Graph,
    params: SpreadParams,
    init: SpreadState,
    t_grid,
    n_reps: int,
    seed: SeedStream,
) -> BatchMarginals:
    """Estimate P(X_i(t) = I) and P(X_i(t) = S) at grid times over many runs.

    All replications advance synchronously through vectorized Gillespie
    steps; each replication consumes its own exponential and uniform draws,
    so the estimate is an ordinary Monte Carlo average of i.i.d. paths.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("time grid must be strictly increasing and nonempty")
    if np.any(t_grid < 0):
        raise ValueError("grid times must be nonnegative")
    if n_reps < 1:
        raise ValueError("need at least one replication")
    init.check_model(params.model)
    n = graph.n_nodes
    n_t = t_grid.size
    eps = params.epsilon_vector(n)
    adjacency = np.asarray(graph.adjacency(), dtype=float)
    rng = seed.generator()

    states = np.tile(init.compartments, (n_reps, 1)).astype(np.int8)
    t = np.zeros(n_reps)
    grid_ptr = np.zeros(n_reps, dtype=int)
    alive = np.ones(n_reps, dtype=bool)
    inf_sum = np.zeros((n_t, n), dtype=np.int64)
    sus_sum = np.zeros((n_t, n), dtype=np.int64)
    recovery_target = S if params.model == "SIS" else R

    def record(mask: np.ndarray, upto: np.ndarray) -> None:
        """Record rep states at every remaining grid point strictly below `upto`."""
        while True:
            can = mask & alive & (grid_ptr < n_t)
            if not np.any(can):
                break
            g_times = np.where(
                grid_ptr < n_t, t_grid[np.minimum(grid_ptr, n_t - 1)], np.inf
            )
            cross = can & (g_times < upto)
            if not np.any(cross):
                break
            for g in np.unique(grid_ptr[cross]):
                sel = cross & (grid_ptr == g)
                inf_sum[g] += (states[sel] == I).sum(axis=0)
                sus_sum[g] += (states[sel] == S).sum(axis=0)
            grid_ptr[cross] += 1

    while np.any(alive):
        infected = (states == I).astype(float)
        rates = np.where(states == I, params.gamma, 0.0) + (states == S) * (
            params.tau * (infected @ adjacency) + eps
        )
        rates[~alive] = 0.0
        total = rates.sum(axis=1)
        absorbed = alive & (total <= 0.0)
        if np.any(absorbed):
            record(absorbed, np.full(n_reps, np.inf))
            alive[absorbed] = False
        active = alive & (total > 0.0)
        if not np.any(active):
            break
        dt = np.full(n_reps, np.inf)
        dt[active] = rng.exponential(1.0, size=int(active.sum())) / total[active]
        t_next = t + dt
        # Grid times in [t, t_next) see the pre-event state.
        record(active, t_next)
        done = active & (grid_ptr >= n_t)
        alive[done] = False
        active &= alive
        if not np.any(active):
            continue
        u = rng.uniform(size=n_reps)
        cum = np.cumsum(rates, axis=1)
        picks = (cum < (u * total)[:, None]).sum(axis=1)
        picks = np.minimum(picks, n - 1)
        rows = np.nonzero(active)[0]
        cols = picks[rows]
        old = states[rows, cols]
        states[rows, cols] = np.where(old == I, recovery_target, I).astype(np.int8)
        t[rows] = t_next[rows]

    return BatchMarginals(
        t_grid=t_grid,
        infected=inf_sum / float(n_reps),
        susceptible=sus_sum / float(n_reps),
        n_reps=n_reps,
    )
