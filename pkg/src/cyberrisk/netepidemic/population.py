"""Population-level SIR dynamics and the induced portfolio infection hazard.

A deterministic global epidemic S/I/R trajectory (constant population) is
integrated as an ODE; an insurer's local portfolio of firms then sees an
infection hazard proportional to the number of globally infected devices,
from which firm infection times are sampled by inverting the cumulative
hazard.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp

from ..core import SeedStream

__all__ = [
    "PopulationSIR",
    "SirTrajectory",
    "integrate_population_sir",
    "PortfolioHazard",
    "portfolio_hazard",
]

_CONSERVATION_TOL = 1e-9


@dataclass(frozen=True)
class PopulationSIR:
    """dS = -tau S I, dI = tau S I - gamma I, dR = gamma I, S+I+R constant."""

    n_pop: float
    tau: float
    gamma: float
    s0: float
    i0: float
    r0: float = 0.0

    def __post_init__(self) -> None:
        if self.tau < 0 or self.gamma <= 0:
            raise ValueError("need tau >= 0 and gamma > 0")
        if min(self.s0, self.i0, self.r0) < 0:
            raise ValueError("initial compartments must be nonnegative")
        total = self.s0 + self.i0 + self.r0
        if not np.isclose(total, self.n_pop, rtol=1e-12, atol=1e-9):
            raise ValueError("initial compartments must sum to the population size")


@dataclass(frozen=True)
class SirTrajectory:
    t_grid: np.ndarray
    susceptible: np.ndarray
    infected: np.ndarray
    recovered: np.ndarray


def integrate_population_sir(p: PopulationSIR, t_grid) -> SirTrajectory:
    """Integrate the population model on the grid; conservation is enforced."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("time grid must be strictly increasing and nonempty")
    if t_grid[0] < 0:
        raise ValueError("grid times must be nonnegative")

    def rhs(_t, x):
        s, i, _ = x
        flow = p.tau * s * i
        return [-flow, flow - p.gamma * i, p.gamma * i]

    t_eval = t_grid
    span = (0.0, float(t_grid[-1])) if t_grid[-1] > 0 else (0.0, 1e-12)
    sol = solve_ivp(
        rhs,
        span,
        [p.s0, p.i0, p.r0],
        t_eval=t_eval if t_grid[-1] > 0 else None,
        method="LSODA",
        rtol=1e-11,
        atol=1e-12 * max(p.n_pop, 1.0),
    )
    if not sol.success:
        raise RuntimeError(f"SIR integration failed: {sol.message}")
    values = sol.y.T if t_grid[-1] > 0 else np.tile([p.s0, p.i0, p.r0], (t_grid.size, 1))
    s, i, r = values[:, 0], values[:, 1], values[:, 2]
    residual = np.max(np.abs(s + i + r - p.n_pop)) / max(p.n_pop, 1.0)
    if residual > _CONSERVATION_TOL:
        raise RuntimeError(f"population conservation violated: {residual:.3e}")
    if min(s.min(), i.min(), r.min()) < -1e-12:
        raise RuntimeError("negative compartment beyond tolerance")
    return SirTrajectory(t_grid=t_grid, susceptible=s, infected=i, recovered=r)


@dataclass(frozen=True)
class PortfolioHazard:
    """Firm infection hazard tau * I(t) driven by a global trajectory."""

    t_grid: np.ndarray
    infected: np.ndarray
    tau: float

    def __post_init__(self) -> None:
        t = np.asarray(self.t_grid, dtype=float)
        i = np.asarray(self.infected, dtype=float)
        if t.shape != i.shape or t.ndim != 1 or t.size < 2:
            raise ValueError("need matching 1-d grid and infected curve")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "infected", i)
        cumhaz = np.concatenate(
            [[0.0], cumulative_trapezoid(self.tau * i, t)]
        )
        object.__setattr__(self, "_cumhaz", cumhaz)

    def hazard(self, t) -> np.ndarray:
        return self.tau * np.interp(t, self.t_grid, self.infected)

    def cumulative_hazard(self, t) -> np.ndarray:
        return np.interp(t, self.t_grid, self._cumhaz)

    def infection_probability(self, t) -> np.ndarray:
        return 1.0 - np.exp(-self.cumulative_hazard(t))

    def sample_infection_times(self, n_firms: int, seed: SeedStream) -> np.ndarray:
        """Firm infection times on the grid span; inf for never infected."""
        if n_firms < 1:
            raise ValueError("need at least one firm")
        rng = seed.generator()
        e = rng.exponential(size=n_firms)
        out = np.full(n_firms, np.inf)
        reachable = e <= self._cumhaz[-1]
        out[reachable] = np.interp(e[reachable], self._cumhaz, self.t_grid)
        return out


def portfolio_hazard(trajectory: SirTrajectory, tau: float) -> PortfolioHazard:
    """Hazard object lambda(t) = tau * I(t) for policyholder infection times."""
    return PortfolioHazard(
        t_grid=trajectory.t_grid, infected=trajectory.infected, tau=tau
    )
