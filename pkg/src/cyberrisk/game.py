"""Static interdependent-security game: protection levels, insurance, welfare.

Agents on a network pick continuous self-protection levels x in [0, 1].
Infection is a one-shot event: an agent is hit directly with probability
psi(x_i), or through an adjacent agent j with probability h_ij psi_j(x_j),
all channels independent.  Expected utilities compare the uninsured binary
lottery against full coverage at a premium; equilibria are searched by
synchronous best-response sweeps over a refined grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "LinearUtility",
    "ExponentialUtility",
    "LogUtility",
    "PowerCost",
    "LinearAttack",
    "AgentSpec",
    "GameSpec",
    "infection_probability",
    "expected_utility",
    "best_response",
    "nash_iterate",
    "GameResult",
    "social_welfare",
]

_COARSE_STEP = 1e-3
_REFINE_TARGET = 1e-6
_FIXED_POINT_TOL = 1e-6


@dataclass(frozen=True)
class LinearUtility:
    def __call__(self, w):
        return np.asarray(w, dtype=float)


@dataclass(frozen=True)
class ExponentialUtility:
    """Constant absolute risk aversion: U(w) = -exp(-a w)."""

    a: float

    def __post_init__(self) -> None:
        if self.a <= 0:
            raise ValueError("risk aversion must be positive")

    def __call__(self, w):
        return -np.exp(-self.a * np.asarray(w, dtype=float))


@dataclass(frozen=True)
class LogUtility:
    """Shifted logarithm; undefined at or below -shift."""

    shift: float = 0.0

    def __call__(self, w):
        arg = np.asarray(w, dtype=float) + self.shift
        if np.any(arg <= 0):
            raise ValueError("log utility undefined at nonpositive argument")
        return np.log(arg)


@dataclass(frozen=True)
class PowerCost:
    """Protection cost c * x^p, increasing and convex for p >= 1."""

    scale: float
    exponent: float = 2.0

    def __post_init__(self) -> None:
        if self.scale < 0:
            raise ValueError("cost scale must be nonnegative")
        if self.exponent < 1:
            raise ValueError("cost exponent must be >= 1 (convexity)")

    def __call__(self, x):
        return self.scale * np.asarray(x, dtype=float) ** self.exponent


@dataclass(frozen=True)
class LinearAttack:
    """Direct-attack probability p0 * (1 - x), decreasing in protection."""

    p0: float = 1.0

    def __post_init__(self) -> None:
        if not 0 <= self.p0 <= 1:
            raise ValueError("attack scale must lie in [0, 1]")

    def __call__(self, x):
        return self.p0 * (1.0 - np.asarray(x, dtype=float))


@dataclass(frozen=True)
class AgentSpec:
    """One insurance customer: wealth, utility, loss, cost and attack curves."""

    wealth: float
    loss: float
    utility: Callable = field(default_factory=LinearUtility)
    cost: Callable = field(default_factory=lambda: PowerCost(1.0, 2.0))
    attack: Callable = field(default_factory=LinearAttack)

    def __post_init__(self) -> None:
        if self.loss <= 0:
            raise ValueError("loss must be positive")
        if float(self.cost(0.0)) < 0:
            raise ValueError("protection cost must satisfy C(0) >= 0")
        for x in (0.0, 0.5, 1.0):
            v = float(self.attack(x))
            if not 0.0 <= v <= 1.0:
                raise ValueError("attack curve must map [0,1] into [0,1]")


@dataclass(frozen=True)
class GameSpec:
    """Agents plus the contagion matrix and the insurance arrangement.

    ``premiums`` may be "fair" (recomputed as p_i * L_i from the current
    profile, the zero-profit competitive reading) or a fixed vector of
    per-agent premiums, e.g. injected by the systemic pricing search.
    """

    agents: tuple[AgentSpec, ...]
    contagion: np.ndarray
    premiums: object = "fair"

    def __post_init__(self) -> None:
        h = np.asarray(self.contagion, dtype=float)
        n = len(self.agents)
        if h.shape != (n, n):
            raise ValueError("contagion matrix shape mismatch")
        if np.any((h < 0) | (h > 1)):
            raise ValueError("contagion entries must lie in [0, 1]")
        if np.any(np.diag(h) != 0):
            raise ValueError("contagion diagonal must be zero")
        object.__setattr__(self, "contagion", h)
        if isinstance(self.premiums, str):
            if self.premiums != "fair":
                raise ValueError("premium rule must be 'fair' or a fixed vector")
        else:
            prem = np.asarray(self.premiums, dtype=float)
            if prem.shape != (n,):
                raise ValueError("fixed premiums need one entry per agent")
            object.__setattr__(self, "premiums", prem)

    @property
    def n_agents(self) -> int:
        return len(self.agents)


def _check_profile(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError("profile length mismatch")
    if np.any((x < 0) | (x > 1)):
        raise ValueError("protection levels must lie in [0, 1]")
    return x


def infection_probability(i: int, x, spec: GameSpec) -> float:
    """P(agent i infected) = 1 - (1 - psi_i(x_i)) prod_j (1 - h_ij psi_j(x_j))."""
    x = _check_profile(x, spec.n_agents)
    psi = np.array([float(a.attack(xi)) for a, xi in zip(spec.agents, x)])
    h = spec.contagion[i]
    others = np.prod(np.delete(1.0 - h * psi, i))
    return float(1.0 - (1.0 - psi[i]) * others)


def _premium(i: int, p_i: float, spec: GameSpec) -> float:
    if isinstance(spec.premiums, str):
        return p_i * spec.agents[i].loss
    return float(spec.premiums[i])


def expected_utility(i: int, x, spec: GameSpec, insured: bool) -> float:
    """Expected utility of agent i at profile x, with or without full coverage."""
    x = _check_profile(x, spec.n_agents)
    agent = spec.agents[i]
    p = infection_probability(i, x, spec)
    c = float(agent.cost(x[i]))
    u = agent.utility
    if not insured:
        return float(
            (1.0 - p) * u(agent.wealth - c) + p * u(agent.wealth - agent.loss - c)
        )
    pi = _premium(i, p, spec)
    cover = agent.loss  # full coverage
    return float(
        (1.0 - p) * u(agent.wealth - pi - c)
        + p * u(agent.wealth - agent.loss - c - pi + cover)
    )


def _eu_on_grid(i: int, x_i_grid: np.ndarray, x_others, spec: GameSpec, insured: bool):
    """Vectorized expected utility of agent i over candidate own levels."""
    agent = spec.agents[i]
    psi_others = np.array(
        [float(a.attack(xj)) for a, xj in zip(spec.agents, x_others)]
    )
    h = spec.contagion[i]
    contagion_factor = np.prod(np.delete(1.0 - h * psi_others, i))
    psi_own = np.asarray(agent.attack(x_i_grid), dtype=float)
    p = 1.0 - (1.0 - psi_own) * contagion_factor
    c = np.asarray(agent.cost(x_i_grid), dtype=float)
    u = agent.utility
    if not insured:
        return (1.0 - p) * u(agent.wealth - c) + p * u(
            agent.wealth - agent.loss - c
        )
    if isinstance(spec.premiums, str):
        pi = p * agent.loss
    else:
        pi = float(spec.premiums[i])
    cover = agent.loss
    return (1.0 - p) * u(agent.wealth - pi - c) + p * u(
        agent.wealth - agent.loss - c - pi + cover
    )


def best_response(i: int, x, spec: GameSpec, insured: bool) -> float:
    """Utility-maximizing own level on a 1e-3 grid refined to 1e-6.

    Ties break toward the smaller (cheaper) protection level.
    """
    x = _check_profile(x, spec.n_agents)
    lo, hi, step = 0.0, 1.0, _COARSE_STEP
    best = 0.0
    while True:
        grid = np.arange(lo, hi + step / 2, step)
        grid = np.clip(grid, 0.0, 1.0)
        values = _eu_on_grid(i, grid, x, spec, insured)
        best = float(grid[int(np.argmax(values))])
        if step <= _REFINE_TARGET:
            return best
        lo = max(0.0, best - step)
        hi = min(1.0, best + step)
        step = step / 100.0


@dataclass(frozen=True)
class GameResult:
    profile: np.ndarray
    converged: bool
    rounds: int
    infection_probabilities: np.ndarray
    expected_utilities: np.ndarray
    welfare: float
    insured: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "profile": [float(v) for v in self.profile],
                "converged": self.converged,
                "rounds": self.rounds,
                "infection_probabilities": [
                    float(v) for v in self.infection_probabilities
                ],
                "expected_utilities": [float(v) for v in self.expected_utilities],
                "welfare": self.welfare,
                "insured": self.insured,
            }
        )


def nash_iterate(
    spec: GameSpec,
    insured: bool,
    x0=None,
    max_rounds: int = 200,
) -> GameResult:
    """Synchronous best-response sweeps until the profile stops moving.

    Non-convergence is reported through the flag, not raised.  A converged
    fixed point is re-verified with one extra sweep.
    """
    n = spec.n_agents
    x = np.zeros(n) if x0 is None else _check_profile(x0, n)
    converged = False
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        x_new = np.array(
            [best_response(i, x, spec, insured) for i in range(n)]
        )
        delta = float(np.max(np.abs(x_new - x)))
        x = x_new
        if delta < _FIXED_POINT_TOL:
            converged = True
            break
    if converged:
        verify = np.array([best_response(i, x, spec, insured) for i in range(n)])
        converged = bool(np.max(np.abs(verify - x)) < 10 * _FIXED_POINT_TOL)
    eu = np.array([expected_utility(i, x, spec, insured) for i in range(n)])
    p = np.array([infection_probability(i, x, spec) for i in range(n)])
    return GameResult(
        profile=x,
        converged=converged,
        rounds=rounds,
        infection_probabilities=p,
        expected_utilities=eu,
        welfare=float(np.sum(eu)),
        insured=insured,
    )


def social_welfare(x, spec: GameSpec, insured: bool) -> float:
    """Sum of agent expected utilities at the profile."""
    return float(
        sum(expected_utility(i, x, spec, insured) for i in range(spec.n_agents))
    )
