"""Moment-closure ODE approximations of the spread dynamics.

The exact node-marginal equations couple to pair moments, pairs to triples,
and so on; a closure truncates this hierarchy.  Supported schemes:

* ``nimfa`` (= first-order independent): E[B_i B_j] ~ E[B_i] E[B_j]; upper
  bound for SIS infection probabilities.
* ``split-independent`` / ``split-hilbert``: split the top-order moment into
  two disjoint blocks and apply a mean-field function F to each block
  (identity or square root).  At order 1 the Hilbert variant lower-bounds
  SIS infection probabilities.
* ``kirkwood-pair`` (order 2): track pair moments over edges and close
  triples with the Kirkwood quotient; open triples whose middle node
  separates the outer pair reduce to the Bayes-exact form, which makes the
  SIR pair model exact on trees.

Closure quotients with denominators below 1e-12 fall back to the
independent product of marginals (counted in ``guard_count``); trajectories
are clamped to [0, 1] after integration with clamped points counted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from ..core import ModelError
from .graphs import Graph
from .master import exact_master
from .spread import I, S, SpreadParams, SpreadState

__all__ = [
    "ClosureSpec",
    "ClosureResult",
    "ThresholdReport",
    "solve_closure",
    "nimfa_threshold",
    "pair_closure_sir_tree_check",
]

_SCHEMES = ("nimfa", "split-independent", "split-hilbert", "kirkwood-pair")
_GUARD = 1e-12
_CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class ClosureSpec:
    scheme: str
    order: int = 1

    def __post_init__(self) -> None:
        if self.scheme not in _SCHEMES:
            raise ValueError(f"unknown closure scheme {self.scheme!r}")
        if self.scheme == "nimfa" and self.order != 1:
            raise ValueError("nimfa is a first-order closure")
        if self.scheme == "kirkwood-pair" and self.order != 2:
            raise ValueError("kirkwood-pair is a second-order closure")
        if self.scheme.startswith("split") and self.order not in (1, 2):
            raise ValueError("split closures support orders 1 and 2")


@dataclass(frozen=True)
class ClosureResult:
    t_grid: np.ndarray
    infected: np.ndarray  # (T, N)
    susceptible: np.ndarray  # (T, N)
    clamp_count: int
    guard_count: int
    spec: ClosureSpec


class _GuardCounter:
    def __init__(self) -> None:
        self.count = 0


def _mean_field(scheme: str):
    if scheme == "split-hilbert":
        return lambda v: np.sqrt(max(float(v), 0.0))
    return lambda v: max(float(v), 0.0)


def _first_order_rhs(graph: Graph, params: SpreadParams, scheme: str):
    a = np.asarray(graph.adjacency(), dtype=float)
    tau, gamma = params.tau, params.gamma
    hilbert = scheme == "split-hilbert"

    if params.model == "SIS":

        def rhs(_t, y):
            y = np.clip(y, 0.0, 1.0)
            if hilbert:
                root = np.sqrt(y)
                pair_term = root * (a @ root)
            else:
                pair_term = y * (a @ y)
            return -gamma * y + tau * (a @ y) - tau * pair_term

        return rhs

    n = graph.n_nodes

    def rhs(_t, state):
        s = np.clip(state[:n], 0.0, 1.0)
        y = np.clip(state[n:], 0.0, 1.0)
        if hilbert:
            flow = tau * np.sqrt(s) * (a @ np.sqrt(y))
        else:
            flow = tau * s * (a @ y)
        return np.concatenate([-flow, flow - gamma * y])

    return rhs


# ---------------------------------------------------------------------------
# Pair-based systems (order 2).
# ---------------------------------------------------------------------------


def _attack_contexts(graph: Graph):
    """For each directed edge (other, attacked), the external attackers.

    Context entries are (l, il_edge) where ``l`` is an infected-neighbor
    candidate of the attacked node distinct from ``other`` and ``il_edge``
    says whether the triple closes into a triangle.
    """
    ctx: dict[tuple[int, int], list[tuple[int, bool]]] = {}
    for i, j in graph.edges:
        for other, attacked in ((i, j), (j, i)):
            ctx[(other, attacked)] = [
                (int(l), graph.has_edge(other, int(l)))
                for l in graph.neighbors(attacked)
                if l != other
            ]
    return ctx


def _sis_pair_rhs(graph: Graph, params: SpreadParams, scheme: str, guard: _GuardCounter):
    n = graph.n_nodes
    edges = graph.edges
    eidx = {e: k for k, e in enumerate(edges)}
    ctx = _attack_contexts(graph)
    tau, gamma = params.tau, params.gamma
    f = _mean_field(scheme)
    split = scheme.startswith("split")

    def rhs(_t, state):
        y = state[:n]
        z = state[n:]

        def zval(i, j):
            return z[eidx[(min(i, j), max(i, j))]]

        def triple(i, j, l):
            # E[I_i S_j I_l]; i--j is the updated edge, l attacks j.
            pair_ij = y[i] - zval(i, j)
            if split:
                return f(pair_ij) * f(y[l])
            pair_jl = y[l] - zval(j, l)
            s_j = 1.0 - y[j]
            il_edge = graph.has_edge(i, l)
            if il_edge:
                denom = y[i] * s_j * y[l]
                if denom < _GUARD:
                    guard.count += 1
                    return y[i] * s_j * y[l]
                return pair_ij * pair_jl * zval(i, l) / denom
            if s_j < _GUARD:
                guard.count += 1
                return y[i] * s_j * y[l]
            return pair_ij * pair_jl / s_j

        dy = np.empty(n)
        for i in range(n):
            acc = 0.0
            for j in graph.neighbors(i):
                acc += y[j] - zval(i, j)
            dy[i] = -gamma * y[i] + tau * acc
        dz = np.empty(len(edges))
        for k, (a_node, b_node) in enumerate(edges):
            zz = z[k]
            val = -2.0 * gamma * zz
            val += tau * (y[a_node] - zz) + tau * (y[b_node] - zz)
            for l, _ in ctx[(a_node, b_node)]:
                val += tau * triple(a_node, b_node, l)
            for l, _ in ctx[(b_node, a_node)]:
                val += tau * triple(b_node, a_node, l)
            dz[k] = val
        return np.concatenate([dy, dz])

    return rhs


def _sir_pair_rhs(graph: Graph, params: SpreadParams, scheme: str, guard: _GuardCounter):
    n = graph.n_nodes
    edges = graph.edges
    n_e = len(edges)
    eidx = {e: k for k, e in enumerate(edges)}
    ctx = _attack_contexts(graph)
    tau, gamma = params.tau, params.gamma
    f = _mean_field(scheme)
    split = scheme.startswith("split")
    kirkwood = scheme == "kirkwood-pair"

    # State layout: s (n), y (n), ss (E), si (E, = E[S_a I_b]), is (E), ii (E).
    def rhs(_t, state):
        s = state[:n]
        y = state[n : 2 * n]
        ss = state[2 * n : 2 * n + n_e]
        si = state[2 * n + n_e : 2 * n + 2 * n_e]
        is_ = state[2 * n + 2 * n_e : 2 * n + 3 * n_e]
        ii = state[2 * n + 3 * n_e :]

        def SS(i, j):
            return ss[eidx[(min(i, j), max(i, j))]]

        def SI(i, j):
            # E[S_i I_j]
            a_node, b_node = min(i, j), max(i, j)
            k = eidx[(a_node, b_node)]
            return si[k] if (i, j) == (a_node, b_node) else is_[k]

        def II(i, j):
            return ii[eidx[(min(i, j), max(i, j))]]

        def t_ssi(i, j, l, jl_closed):
            # E[S_i S_j I_l]; pair (i, j) updated, l attacks j.
            if split:
                return f(SS(i, j)) * f(y[l])
            if jl_closed and kirkwood:
                denom = s[i] * s[j] * y[l]
                if denom < _GUARD:
                    guard.count += 1
                    return s[i] * s[j] * y[l]
                return SS(i, j) * SI(j, l) * SI(i, l) / denom
            if s[j] < _GUARD:
                guard.count += 1
                return s[i] * s[j] * y[l]
            return SS(i, j) * SI(j, l) / s[j]

        def t_isi(l, i, j, lj_closed):
            # E[I_l S_i I_j]; pair (i, j) updated, l attacks i.
            if split:
                return f(SI(i, j)) * f(y[l])
            if lj_closed and kirkwood:
                denom = y[l] * s[i] * y[j]
                if denom < _GUARD:
                    guard.count += 1
                    return y[l] * s[i] * y[j]
                return SI(i, l) * SI(i, j) * II(l, j) / denom
            if s[i] < _GUARD:
                guard.count += 1
                return y[l] * s[i] * y[j]
            return SI(i, l) * SI(i, j) / s[i]

        ds = np.empty(n)
        dy = np.empty(n)
        for i in range(n):
            acc = 0.0
            for j in graph.neighbors(i):
                acc += SI(i, j)
            ds[i] = -tau * acc
            dy[i] = tau * acc - gamma * y[i]

        dss = np.empty(n_e)
        dsi = np.empty(n_e)
        dis = np.empty(n_e)
        dii = np.empty(n_e)
        for k, (a_node, b_node) in enumerate(edges):
            # SS destroyed by attacks on either endpoint from outside the pair.
            loss = 0.0
            for l, closed in ctx[(a_node, b_node)]:
                loss += t_ssi(a_node, b_node, l, closed)
            for l, closed in ctx[(b_node, a_node)]:
                loss += t_ssi(b_node, a_node, l, closed)
            dss[k] = -tau * loss

            # E[S_a I_b]: created when b (susceptible pair partner) is infected
            # by an external attacker; destroyed when a is infected (by b or an
            # external attacker) or b recovers.
            gain = sum(
                t_ssi(a_node, b_node, l, closed)
                for l, closed in ctx[(a_node, b_node)]
            )
            drain = sum(
                t_isi(l, a_node, b_node, closed)
                for l, closed in ctx[(b_node, a_node)]
            )
            dsi[k] = tau * gain - tau * si[k] - tau * drain - gamma * si[k]

            gain = sum(
                t_ssi(b_node, a_node, l, closed)
                for l, closed in ctx[(b_node, a_node)]
            )
            drain = sum(
                t_isi(l, b_node, a_node, closed)
                for l, closed in ctx[(a_node, b_node)]
            )
            dis[k] = tau * gain - tau * is_[k] - tau * drain - gamma * is_[k]

            # E[I_a I_b]: created from S_a I_b (a infected) or I_a S_b (b infected).
            gain_a = si[k] + sum(
                t_isi(l, a_node, b_node, closed)
                for l, closed in ctx[(b_node, a_node)]
            )
            gain_b = is_[k] + sum(
                t_isi(l, b_node, a_node, closed)
                for l, closed in ctx[(a_node, b_node)]
            )
            dii[k] = tau * (gain_a + gain_b) - 2.0 * gamma * ii[k]

        return np.concatenate([ds, dy, dss, dsi, dis, dii])

    return rhs


def _pair_initial_state(graph: Graph, init: SpreadState, model: str) -> np.ndarray:
    comps = init.compartments
    y0 = (comps == I).astype(float)
    if model == "SIS":
        z0 = np.array([y0[i] * y0[j] for i, j in graph.edges])
        return np.concatenate([y0, z0])
    s0 = (comps == S).astype(float)
    ss0 = np.array([s0[i] * s0[j] for i, j in graph.edges])
    si0 = np.array([s0[i] * y0[j] for i, j in graph.edges])
    is0 = np.array([y0[i] * s0[j] for i, j in graph.edges])
    ii0 = np.array([y0[i] * y0[j] for i, j in graph.edges])
    return np.concatenate([s0, y0, ss0, si0, is0, ii0])


def solve_closure(
    graph: Graph,
    params: SpreadParams,
    init: SpreadState,
    closure: ClosureSpec,
    t_grid,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> ClosureResult:
    """Integrate the closed moment system; returns clamped marginals."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("time grid must be strictly increasing and nonempty")
    if np.any(t_grid < 0):
        raise ValueError("grid times must be nonnegative")
    if init.compartments.size != graph.n_nodes:
        raise ValueError("initial state size does not match the graph")
    init.check_model(params.model)
    if np.any(params.epsilon_vector(graph.n_nodes) != 0.0):
        raise ValueError("closures are implemented for epsilon = 0")
    n = graph.n_nodes
    guard = _GuardCounter()

    if closure.order == 1:
        rhs = _first_order_rhs(graph, params, closure.scheme)
        if params.model == "SIS":
            state0 = (init.compartments == I).astype(float)
        else:
            state0 = np.concatenate(
                [
                    (init.compartments == S).astype(float),
                    (init.compartments == I).astype(float),
                ]
            )
    else:
        if params.model == "SIS":
            rhs = _sis_pair_rhs(graph, params, closure.scheme, guard)
        else:
            rhs = _sir_pair_rhs(graph, params, closure.scheme, guard)
        state0 = _pair_initial_state(graph, init, params.model)

    t0, t1 = 0.0, float(t_grid[-1])
    if t1 == 0.0:
        raw = np.tile(state0, (t_grid.size, 1))
    else:
        sol = solve_ivp(
            rhs,
            (t0, t1),
            state0,
            t_eval=t_grid,
            method="LSODA",
            rtol=rtol,
            atol=atol,
        )
        if not sol.success:
            raise ModelError(f"closure integration failed: {sol.message}")
        raw = sol.y.T

    if params.model == "SIS":
        infected_raw = raw[:, :n]
        susceptible_raw = 1.0 - infected_raw
    else:
        susceptible_raw = raw[:, :n]
        infected_raw = raw[:, n : 2 * n]

    clamp_count = int(
        np.sum((infected_raw < -_CLAMP_TOL) | (infected_raw > 1.0 + _CLAMP_TOL))
    )
    infected = np.clip(infected_raw, 0.0, 1.0)
    susceptible = np.clip(susceptible_raw, 0.0, 1.0)
    return ClosureResult(
        t_grid=t_grid,
        infected=infected,
        susceptible=susceptible,
        clamp_count=clamp_count,
        guard_count=guard.count,
        spec=closure,
    )


@dataclass(frozen=True)
class ThresholdReport:
    regime: str
    spectral_radius: float
    ratio: float


def nimfa_threshold(graph: Graph, params: SpreadParams) -> ThresholdReport:
    """Linear-stability classification of the infection-free state.

    Subcritical iff tau/gamma < 1/spectral_radius(A); the spectral radius is
    computed by power iteration to 1e-8.
    """
    mu = graph.spectral_radius(tol=1e-8)
    ratio = params.tau / params.gamma
    if mu == 0.0 or ratio < 1.0 / mu:
        regime = "subcritical"
    else:
        regime = "supercritical"
    return ThresholdReport(regime=regime, spectral_radius=mu, ratio=ratio)


def pair_closure_sir_tree_check(
    tree: Graph,
    params: SpreadParams,
    init: SpreadState,
    t_grid,
) -> float:
    """Max deviation of the pair-based SIR closure from the exact marginals.

    Only defined on trees, where every triple is open and the pair model is
    exact up to integration error.
    """
    if not tree.is_tree():
        raise ModelError("non-tree input")
    if params.model != "SIR":
        raise ValueError("tree exactness check applies to the SIR model")
    closure = solve_closure(
        tree, params, init, ClosureSpec("kirkwood-pair", 2), t_grid
    )
    master = exact_master(tree, params, init, t_grid)
    dev_i = np.max(np.abs(closure.infected - master.infected))
    dev_s = np.max(np.abs(closure.susceptible - master.susceptible))
    return float(max(dev_i, dev_s))
