"""Non-Markovian spread without immunity: general waiting-time distributions.

Per current configuration, every infected node draws a recovery waiting
time and every susceptible node draws internal transmission times (one per
infected neighbor, coupled by a copula, sharing a marginal) plus an
independent external arrival time.  The global minimum fires, all clocks
are regenerated, and the loop repeats until the horizon or absorption.

With exponential marginals and independent clocks this reduces exactly to
the Markov model with an external infection rate (the epsilon-SIS case).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..core import SeedStream
from .graphs import Graph
from .spread import I, S, SpreadLog, SpreadState

__all__ = ["DeterministicWaiting", "NonMarkovSpec", "simulate_nonmarkov"]


@dataclass(frozen=True)
class DeterministicWaiting:
    """Degenerate waiting time (ppf constant)."""

    value: float

    def __post_init__(self) -> None:
        if self.value <= 0:
            raise ValueError("waiting time must be positive")

    def ppf(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.value)


def _per_node(dists, n: int) -> list:
    if dists is None:
        return [None] * n
    if hasattr(dists, "ppf"):
        return [dists] * n
    dists = list(dists)
    if len(dists) != n:
        raise ValueError("need one waiting-time distribution per node")
    return dists


@dataclass(frozen=True)
class NonMarkovSpec:
    """Waiting-time distributions of the spread; all supports on [0, inf).

    ``recovery`` and ``external`` and ``internal`` each accept a single
    quantile-capable distribution or one per node; ``external=None`` turns
    outside infections off.  ``copula_family`` maps a dimension to a copula
    coupling the internal transmission times of one node (``None`` means
    independence).
    """

    recovery: object
    internal: object
    external: object = None
    copula_family: Callable[[int], object] | None = None


def simulate_nonmarkov(
    graph: Graph,
    spec: NonMarkovSpec,
    init: SpreadState,
    horizon: float,
    seed: SeedStream,
) -> SpreadLog:
    """Event-driven simulation; returns the same log format as Gillespie."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if init.compartments.size != graph.n_nodes:
        raise ValueError("initial state size does not match the graph")
    init.check_model("SIS")
    n = graph.n_nodes
    recovery = _per_node(spec.recovery, n)
    internal = _per_node(spec.internal, n)
    external = _per_node(spec.external, n)
    rng = seed.generator()

    states = init.compartments.copy()
    t = init.time
    times, nodes, froms, tos = [], [], [], []
    while True:
        best_wait = np.inf
        best_node = -1
        for i in range(n):
            if states[i] == I:
                w = float(recovery[i].ppf(rng.random()))
            else:
                w = np.inf
                infected_nb = [j for j in graph.neighbors(i) if states[j] == I]
                k = len(infected_nb)
                if k > 0:
                    if k == 1 or spec.copula_family is None:
                        u = rng.random(k)
                    else:
                        u = spec.copula_family(k).sample_rng(1, rng)[0]
                    w = float(np.min(internal[i].ppf(u)))
                if external[i] is not None:
                    w = min(w, float(external[i].ppf(rng.random())))
            if w < best_wait:
                best_wait = w
                best_node = i
        if not np.isfinite(best_wait):
            break  # absorbing configuration
        t = t + best_wait
        if t > horizon:
            break
        old = int(states[best_node])
        new = S if old == I else I
        states[best_node] = new
        times.append(t)
        nodes.append(best_node)
        froms.append(old)
        tos.append(new)
    return SpreadLog(
        n_nodes=n,
        model="SIS",
        init=init.compartments.copy(),
        times=np.array(times),
        nodes=np.array(nodes, dtype=int),
        from_codes=np.array(froms, dtype=np.int8),
        to_codes=np.array(tos, dtype=np.int8),
        horizon=horizon,
    )
