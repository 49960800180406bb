"""Monetary risk measures, premium principles, and systemic premium search.

All risk measures operate on empirical laws (equal-weight samples of the
financial position X, losses entering as negative values).  The systematic
pricing layer decomposes positions into a replicable hedge plus a residual
priced by a risk measure; the systemic layer searches premium matrices kept
admissible by two acceptance tests (solvency of the net asset value and
viability of the stand-alone cyber result).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .core import ModelError, SeedStream, stable_child_index
from .game import GameSpec, nash_iterate

__all__ = [
    "value_at_risk",
    "average_value_at_risk",
    "entropic",
    "distortion",
    "expectation",
    "VaR",
    "AVaR",
    "Entropic",
    "Distortion",
    "Expectation",
    "classical_premium",
    "decompose_nonsystemic",
    "LlnReport",
    "conditional_lln_check",
    "HedgeCandidate",
    "HedgeFamily",
    "SystematicPricing",
    "systematic_premium",
    "SubadditivityReport",
    "portfolio_subadditivity_report",
    "net_asset_value",
    "AcceptanceSpec",
    "is_admissible",
    "FixedLossModel",
    "BinaryLossModel",
    "GameLossModel",
    "GridPoint",
    "PremiumSearchResult",
    "InfeasiblePremiumError",
    "systemic_premium_search",
    "check_upward_closed",
]

_ENTROPIC_GUARD = 700.0
_ACCEPT_TOL = 1e-10


def _sample(x) -> np.ndarray:
    values = np.asarray(getattr(x, "values", x), dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("need a nonempty one-dimensional sample")
    return values


def value_at_risk(x, lam: float) -> float:
    """Empirical VaR: smallest cash addition making the loss probability <= lam.

    Equals minus the upper lam-quantile of the position sample.
    """
    if not 0 < lam < 1:
        raise ValueError("VaR level must lie in (0, 1)")
    values = np.sort(_sample(x))
    n = values.size
    k = int(np.floor(n * lam + 1e-12))  # upper-quantile index, 0-based
    return float(-values[min(k, n - 1)])


def average_value_at_risk(x, lam: float) -> float:
    """Empirical AVaR: the level-average of VaR over (0, lam]."""
    if not 0 < lam <= 1:
        raise ValueError("AVaR level must lie in (0, 1]")
    values = np.sort(_sample(x))
    n = values.size
    j_max = int(np.ceil(n * lam - 1e-12))
    j = np.arange(1, j_max + 1)
    weights = np.minimum(j / n, lam) - (j - 1) / n
    return float(np.sum(weights * (-values[:j_max])) / lam)


def entropic(x, gamma: float) -> float:
    """Entropic risk measure (1/gamma) log E[exp(-gamma X)] on the sample."""
    if gamma <= 0:
        raise ValueError("entropic gamma must be positive")
    values = _sample(x)
    spread = gamma * (float(np.max(-values)) - float(np.min(-values)))
    if spread > _ENTROPIC_GUARD:
        raise ModelError("gamma too large for sample scale")
    n = values.size
    return float((logsumexp(-gamma * values) - np.log(n)) / gamma)


def _distortion_weights(psi, n: int) -> np.ndarray:
    grid = np.arange(n + 1) / n
    if callable(psi):
        vals = np.asarray([float(psi(u)) for u in grid])
    else:
        u_grid, psi_grid = (np.asarray(g, dtype=float) for g in psi)
        if np.any(np.diff(psi_grid) < -1e-12):
            raise ValueError("psi grid not monotone")
        vals = np.interp(grid, u_grid, psi_grid)
    if np.any(np.diff(vals) < -1e-12):
        raise ValueError("psi grid not monotone")
    if not (abs(vals[0]) < 1e-9 and abs(vals[-1] - 1.0) < 1e-9):
        raise ValueError("distortion must satisfy psi(0) = 0 and psi(1) = 1")
    return np.diff(vals)


def distortion(x, psi) -> float:
    """Choquet integral of the loss under the distorted empirical law.

    On an equal-weight sample this is exactly sum_i l_[i] (psi(i/n) -
    psi((i-1)/n)) with losses l sorted in decreasing order; negative parts
    are handled by the same comonotone representation.
    """
    values = _sample(x)
    losses = np.sort(-values)[::-1]
    weights = _distortion_weights(psi, losses.size)
    return float(np.sum(losses * weights))


def expectation(x) -> float:
    """Net premium measure: expected loss E[-X]."""
    return float(np.mean(-_sample(x)))


@dataclass(frozen=True)
class VaR:
    level: float

    def value(self, x) -> float:
        return value_at_risk(x, self.level)


@dataclass(frozen=True)
class AVaR:
    level: float

    def value(self, x) -> float:
        return average_value_at_risk(x, self.level)


@dataclass(frozen=True)
class Entropic:
    gamma: float

    def value(self, x) -> float:
        return entropic(x, self.gamma)


@dataclass(frozen=True)
class Distortion:
    psi: object

    def value(self, x) -> float:
        return distortion(x, self.psi)


@dataclass(frozen=True)
class Expectation:
    def value(self, x) -> float:
        return expectation(x)


def classical_premium(claims, principle: str, a: float | None = None,
                      gamma: float | None = None, psi=None) -> float:
    """Classical premium for a claim sample S (nonnegative loss convention).

    variance/stddev use explicit moment loadings; exponential and wang are
    the entropic and distortion measures applied to the position X = -S.
    """
    s = _sample(claims)
    if principle == "variance":
        if a is None or a <= 0:
            raise ValueError("variance principle needs loading a > 0")
        return float(np.mean(s) + a * np.var(s))
    if principle == "stddev":
        if a is None or a <= 0:
            raise ValueError("stddev principle needs loading a > 0")
        return float(np.mean(s) + a * np.std(s))
    if principle == "exponential":
        if gamma is None:
            raise ValueError("exponential principle needs gamma")
        return entropic(-s, gamma)
    if principle == "wang":
        if psi is None:
            raise ValueError("wang principle needs a distortion")
        return distortion(-s, psi)
    raise ValueError(f"unknown premium principle {principle!r}")


# ---------------------------------------------------------------------------
# Idiosyncratic / systematic decomposition.
# ---------------------------------------------------------------------------


def decompose_nonsystemic(
    values, tags, const: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Split totals into a systematic part (factor-cell mean) and a residual.

    ``tags`` group replications into conditioning cells sharing a factor
    path; the systematic part is the within-cell mean minus ``const`` and
    the idiosyncratic part is the remainder, which has cell-mean ``const``.
    """
    values = _sample(values)
    tags = np.asarray(tags)
    if tags.shape != values.shape:
        raise ValueError("tags must align with the sample")
    systematic = np.empty_like(values)
    for tag in np.unique(tags):
        mask = tags == tag
        if int(mask.sum()) < 2:
            raise ModelError("insufficient conditional replication")
        systematic[mask] = np.mean(values[mask]) - const
    return systematic, values - systematic


@dataclass(frozen=True)
class LlnReport:
    """Convergence of group averages to the conditional mean."""

    n_values: tuple[int, ...]
    errors: tuple[float, ...]  # max over cells of RMS(firm average - cell mean)
    slope: float
    cell_sd: dict
    shortfall: dict  # P(sum of claims exceeds n * conditional mean) per cell
    shortfall_n: int

    @property
    def decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.errors, self.errors[1:]))


def conditional_lln_check(
    firm_sampler: Callable[[object, int, SeedStream], np.ndarray],
    cell_means: Mapping,
    seed: SeedStream,
    n_values: Sequence[int] = (10, 100, 1000, 10_000),
    n_reps: int = 200,
    shortfall_reps: int | None = None,
) -> LlnReport:
    """Measure the conditional law-of-large-numbers convergence rate.

    ``firm_sampler(cell, n_firms, stream)`` returns one replication of
    conditionally i.i.d. firm claims.  The report records, per group size,
    the worst-cell RMS deviation of the firm average from the conditional
    mean, its log-log slope (theoretical value -1/2), and the empirical
    probability that total claims exceed the conditionally fair premium
    income at the largest group size (theoretical limit 1/2).
    """
    n_values = tuple(int(v) for v in n_values)
    errors = []
    cell_sd: dict = {}
    for vi, n_k in enumerate(n_values):
        worst = 0.0
        for ci, (cell, mean_c) in enumerate(cell_means.items()):
            devs = np.empty(n_reps)
            for r in range(n_reps):
                claims = firm_sampler(
                    cell, n_k, seed.child(vi).child(ci).child(r)
                )
                devs[r] = np.mean(claims) - mean_c
            worst = max(worst, float(np.sqrt(np.mean(devs**2))))
            if vi == len(n_values) - 1:
                pooled = firm_sampler(
                    cell, n_k, seed.child(vi).child(ci).child(n_reps)
                )
                cell_sd[cell] = float(np.std(pooled, ddof=1))
        errors.append(worst)
    slope = float(
        np.polyfit(np.log(np.array(n_values)), np.log(np.array(errors)), 1)[0]
    )
    shortfall_reps = n_reps if shortfall_reps is None else int(shortfall_reps)
    shortfall: dict = {}
    n_last = n_values[-1]
    for ci, (cell, mean_c) in enumerate(cell_means.items()):
        hits = 0
        for r in range(shortfall_reps):
            claims = firm_sampler(cell, n_last, seed.child_for("shortfall").child(ci).child(r))
            hits += int(np.sum(claims) > n_last * mean_c)
        shortfall[cell] = hits / shortfall_reps
    return LlnReport(
        n_values=n_values,
        errors=tuple(errors),
        slope=slope,
        cell_sd=cell_sd,
        shortfall=shortfall,
        shortfall_n=n_last,
    )


# ---------------------------------------------------------------------------
# Systematic pricing: hedge plus residual.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HedgeCandidate:
    """A replicable payoff given per replication, with its market cost."""

    label: str
    payoff: np.ndarray
    cost: float

    def __post_init__(self) -> None:
        payoff = np.asarray(self.payoff, dtype=float)
        if payoff.ndim != 1:
            raise ValueError("hedge payoff must align with replications")
        if not np.isfinite(self.cost):
            raise ValueError("hedge cost must be finite")
        object.__setattr__(self, "payoff", payoff)


@dataclass(frozen=True)
class HedgeFamily:
    """Finite candidate hedges, optionally extended by a box-bounded span."""

    candidates: tuple[HedgeCandidate, ...]
    basis: tuple[HedgeCandidate, ...] = ()
    bounds: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if not any(
            np.all(c.payoff == 0.0) and c.cost == 0.0 for c in self.candidates
        ):
            raise ValueError("hedge family must contain the zero hedge")
        if len(self.basis) != len(self.bounds):
            raise ValueError("need one coefficient box per basis payoff")


@dataclass(frozen=True)
class SystematicPricing:
    premium: float
    hedge: HedgeCandidate
    residual_risk: float
    hedge_price: float  # -H0, what the customer is charged for replication


def _span_candidate(
    position: np.ndarray,
    family: HedgeFamily,
    rho,
    rho_max: float | None,
    h_max: float | None,
) -> HedgeCandidate | None:
    """Coordinate descent over the box of span coefficients (multi-start)."""
    if not family.basis:
        return None
    basis = np.stack([b.payoff for b in family.basis])
    costs = np.array([b.cost for b in family.basis])
    lo = np.array([b[0] for b in family.bounds], dtype=float)
    hi = np.array([b[1] for b in family.bounds], dtype=float)

    def objective(coef: np.ndarray) -> float:
        payoff = coef @ basis
        cost = float(coef @ costs)
        residual = rho.value(position - payoff)
        if rho_max is not None and residual > rho_max + _ACCEPT_TOL:
            return np.inf
        if h_max is not None and -cost > h_max + _ACCEPT_TOL:
            return np.inf
        return -cost + residual

    starts = [0.5 * (lo + hi)]
    if len(family.basis) <= 5:
        starts.extend(
            np.array(c) for c in itertools.product(*zip(lo, hi))
        )
    best_coef, best_val = None, np.inf
    for start in starts:
        coef = np.clip(np.asarray(start, dtype=float), lo, hi)
        current = objective(coef)
        for _sweep in range(60):
            improved = False
            for b in range(coef.size):
                span_lo, span_hi = lo[b], hi[b]
                width = span_hi - span_lo
                center = coef[b]
                while width > 1e-4:
                    grid = np.linspace(
                        max(span_lo, center - width / 2),
                        min(span_hi, center + width / 2),
                        21,
                    )
                    vals = []
                    for g in grid:
                        coef[b] = g
                        vals.append(objective(coef))
                    k = int(np.argmin(vals))
                    center = float(grid[k])
                    width /= 5.0
                coef[b] = center
            new = objective(coef)
            if new < current - 1e-12:
                improved = True
                current = new
            if not improved:
                break
        if current < best_val:
            best_val, best_coef = current, coef.copy()
    if best_coef is None or not np.isfinite(best_val):
        return None
    return HedgeCandidate(
        label="span", payoff=best_coef @ basis, cost=float(best_coef @ costs)
    )


def systematic_premium(
    position,
    hedges: HedgeFamily,
    rho,
    rho_max: float | None = None,
    h_max: float | None = None,
) -> SystematicPricing:
    """Minimize -H0 + rho(X - H1) over the hedge family under the constraints.

    The position X is the (negated) systematic claim per replication; hedge
    payoffs must be replication-aligned.  Infeasible constraint sets raise
    with the two feasibility lower bounds attached.
    """
    x = _sample(position)
    pool = list(hedges.candidates)
    span = _span_candidate(x, hedges, rho, rho_max, h_max)
    if span is not None:
        pool.append(span)
    evaluated = []
    for cand in pool:
        if cand.payoff.size not in (1, x.size) and cand.payoff.size != x.size:
            raise ValueError("hedge payoff not replication-aligned")
        payoff = (
            np.full(x.size, cand.payoff[0]) if cand.payoff.size == 1 else cand.payoff
        )
        residual = rho.value(x - payoff)
        feasible = True
        if rho_max is not None and residual > rho_max + _ACCEPT_TOL:
            feasible = False
        if h_max is not None and -cand.cost > h_max + _ACCEPT_TOL:
            feasible = False
        evaluated.append((cand, residual, -cand.cost + residual, feasible))
    feasible_set = [e for e in evaluated if e[3]]
    if not feasible_set:
        min_risk = min(e[1] for e in evaluated)
        min_price = min(-e[0].cost for e in evaluated)
        err = ModelError(
            "no admissible decomposition: constraints below the feasibility "
            f"lower bounds (min residual risk {min_risk:.6g}, "
            f"min hedge price {min_price:.6g})"
        )
        err.min_residual_risk = min_risk
        err.min_hedge_price = min_price
        raise err
    best_premium = min(e[2] for e in feasible_set)
    near = [e for e in feasible_set if e[2] <= best_premium + 1e-12]
    cand, residual, premium, _ = min(near, key=lambda e: -e[0].cost)
    return SystematicPricing(
        premium=float(premium),
        hedge=cand,
        residual_risk=float(residual),
        hedge_price=float(-cand.cost),
    )


@dataclass(frozen=True)
class SubadditivityReport:
    module_premiums: tuple[float, ...]
    sum_of_premiums: float
    portfolio_premium: float
    gain: float


def portfolio_subadditivity_report(
    residuals: Sequence[np.ndarray], rho: AVaR
) -> SubadditivityReport:
    """Diversification gain of pricing residuals jointly instead of separately."""
    if not isinstance(rho, AVaR):
        raise ValueError("subadditivity report requires a coherent AVaR measure")
    arrays = [np.asarray(r, dtype=float) for r in residuals]
    if not arrays:
        raise ValueError("need at least one residual sample")
    length = arrays[0].size
    if any(a.size != length for a in arrays):
        raise ValueError("residual samples are misaligned")
    parts = tuple(rho.value(a) for a in arrays)
    total = rho.value(np.sum(arrays, axis=0))
    gain = sum(parts) - total
    if gain < -1e-10:
        raise RuntimeError("AVaR subadditivity violated; numerical fault")
    return SubadditivityReport(
        module_premiums=parts,
        sum_of_premiums=float(sum(parts)),
        portfolio_premium=float(total),
        gain=float(max(gain, 0.0)),
    )


# ---------------------------------------------------------------------------
# Systemic premium matrices.
# ---------------------------------------------------------------------------


def net_asset_value(premium_matrix, choices, losses, e_tilde) -> np.ndarray:
    """End-of-period net asset value per replication, including cyber business."""
    pi = np.atleast_2d(np.asarray(premium_matrix, dtype=float))
    choices = np.asarray(choices, dtype=int)
    losses = np.atleast_2d(np.asarray(losses, dtype=float))
    n = pi.shape[0]
    if choices.shape != (n,) or losses.shape[0] != n:
        raise ValueError("premiums, choices, and losses must align on customers")
    if np.any((choices < 0) | (choices >= pi.shape[1])):
        raise ValueError("contract choice out of range")
    income = float(pi[np.arange(n), choices].sum())
    e_tilde = np.asarray(e_tilde, dtype=float)
    return e_tilde + income - losses.sum(axis=0)


@dataclass(frozen=True)
class AcceptanceSpec:
    """Two acceptance tests: solvency of E and viability of the cyber result."""

    rho_e: object
    rho_y: object


def is_admissible(
    premium_matrix, choices, losses, e_tilde, spec: AcceptanceSpec
) -> tuple[bool, bool]:
    """Evaluate both acceptance tests for a premium matrix."""
    nav = net_asset_value(premium_matrix, choices, losses, e_tilde)
    standalone = nav - np.asarray(e_tilde, dtype=float)
    accept_e = spec.rho_e.value(nav) <= _ACCEPT_TOL
    accept_y = spec.rho_y.value(standalone) <= _ACCEPT_TOL
    return bool(accept_e), bool(accept_y)


@dataclass(frozen=True)
class FixedLossModel:
    """Premium-independent losses (pure pricing mode)."""

    losses: np.ndarray  # (N, R)
    e_tilde: np.ndarray  # (R,) or scalar

    def __call__(self, premium_matrix, choices):
        return self.losses, self.e_tilde


def BinaryLossModel(
    loss: float, probability: float, n_customers: int, n_reps: int
) -> FixedLossModel:
    """Exact-proportion empirical representation of i.i.d. binary losses.

    Builds the product law of ``n_customers`` independent Bernoulli losses
    with atom counts exactly proportional to their probabilities, so risk
    measures on the sample coincide with the population values.  Requires
    the atom counts to be integers.
    """
    if not 0 <= probability <= 1:
        raise ValueError("loss probability must lie in [0, 1]")
    patterns = list(itertools.product((0, 1), repeat=n_customers))
    columns = []
    for pattern in patterns:
        weight = np.prod(
            [probability if b else 1.0 - probability for b in pattern]
        )
        count = weight * n_reps
        if abs(count - round(count)) > 1e-9:
            raise ValueError(
                "n_reps does not allow an exact-proportion representation"
            )
        block = np.tile(np.array(pattern, dtype=float)[:, None], (1, int(round(count))))
        if block.shape[1]:
            columns.append(block)
    losses = loss * np.concatenate(columns, axis=1)
    return FixedLossModel(losses=losses, e_tilde=np.zeros(losses.shape[1]))


@dataclass(frozen=True)
class GameLossModel:
    """Losses produced by the security game's equilibrium response to premiums.

    Customers are fully covered at fixed premiums taken from the matrix, so
    their equilibrium protection follows from the game; infection then hits
    each customer independently with the equilibrium probability.
    """

    game: GameSpec
    n_reps: int
    seed: SeedStream
    e_tilde: np.ndarray | float = 0.0

    def __call__(self, premium_matrix, choices):
        pi = np.atleast_2d(np.asarray(premium_matrix, dtype=float))
        vector = pi[np.arange(pi.shape[0]), np.asarray(choices, dtype=int)]
        spec = GameSpec(
            agents=self.game.agents,
            contagion=self.game.contagion,
            premiums=vector,
        )
        result = nash_iterate(spec, insured=True)
        p = result.infection_probabilities
        losses_size = np.array([a.loss for a in spec.agents])
        child = stable_child_index(np.ascontiguousarray(pi).tobytes().hex())
        rng = self.seed.child(child).generator()
        hits = rng.random((pi.shape[0], self.n_reps)) < p[:, None]
        losses = hits * losses_size[:, None]
        e_tilde = self.e_tilde
        if np.ndim(e_tilde) == 0:
            e_tilde = np.full(self.n_reps, float(e_tilde))
        return losses, e_tilde


@dataclass(frozen=True)
class GridPoint:
    index: tuple[int, ...]
    matrix: np.ndarray
    choices: np.ndarray
    accept_e: bool
    accept_y: bool
    rho_e_value: float
    rho_y_value: float

    @property
    def admissible(self) -> bool:
        return self.accept_e and self.accept_y


@dataclass(frozen=True)
class PremiumSearchResult:
    grid: np.ndarray  # premium levels per grid dimension
    shape: tuple[int, ...]
    symmetric: bool
    n_customers: int
    n_contracts: int
    points: tuple[GridPoint, ...]
    minimal: tuple[np.ndarray, ...]
    selected: np.ndarray
    selected_value: float
    criterion: str

    def admissible_points(self) -> list[GridPoint]:
        return [p for p in self.points if p.admissible]


class InfeasiblePremiumError(ModelError):
    def __init__(self, message: str, certificate: dict):
        super().__init__(message)
        self.certificate = certificate


_MAX_GRID_DIMS = 12
_MAX_GRID_POINTS = 2_000_000


def systemic_premium_search(
    n_customers: int,
    n_contracts: int,
    loss_model,
    acceptance: AcceptanceSpec,
    premium_min: float,
    premium_max: float,
    step: float,
    criterion: str = "competition",
    weights: Sequence[float] | None = None,
    performance: Callable | None = None,
    symmetric: bool = False,
) -> PremiumSearchResult:
    """Grid-search admissible premium matrices and pick one by a criterion.

    Every grid matrix is evaluated through the loss model (which may embed
    the security game); admissible matrices are filtered to their Pareto
    frontier under componentwise order, and the criterion ("competition"
    minimizes total premium income, "segments" the weighted total,
    "performance" maximizes a user hook) selects among the minimal
    elements, ties broken lexicographically.
    """
    if step <= 0 or premium_max < premium_min:
        raise ValueError("need step > 0 and premium_max >= premium_min")
    dims = n_contracts if symmetric else n_customers * n_contracts
    if dims > _MAX_GRID_DIMS:
        raise ModelError(f"premium grid capped at {_MAX_GRID_DIMS} dimensions")
    levels = np.arange(premium_min, premium_max + step / 2, step)
    if levels.size**dims > _MAX_GRID_POINTS:
        raise ModelError("premium grid too large to enumerate")
    if criterion == "segments":
        if weights is None or len(weights) != n_customers:
            raise ValueError("segments criterion needs one weight per customer")
        weights = np.asarray(weights, dtype=float)
        if np.any(weights <= 0):
            raise ValueError("segment weights must be positive")
    if criterion == "performance" and performance is None:
        raise ValueError("performance criterion needs a callable hook")
    if criterion not in ("competition", "segments", "performance"):
        raise ValueError(f"unknown criterion {criterion!r}")

    points: list[GridPoint] = []
    for index in itertools.product(range(levels.size), repeat=dims):
        if symmetric:
            row = levels[np.array(index)]
            matrix = np.tile(row, (n_customers, 1))
        else:
            matrix = levels[np.array(index)].reshape(n_customers, n_contracts)
        choices = np.argmin(matrix, axis=1)
        losses, e_tilde = loss_model(matrix, choices)
        nav = net_asset_value(matrix, choices, losses, e_tilde)
        standalone = nav - np.asarray(e_tilde, dtype=float)
        rho_e = acceptance.rho_e.value(nav)
        rho_y = acceptance.rho_y.value(standalone)
        points.append(
            GridPoint(
                index=index,
                matrix=matrix,
                choices=choices,
                accept_e=bool(rho_e <= _ACCEPT_TOL),
                accept_y=bool(rho_y <= _ACCEPT_TOL),
                rho_e_value=float(rho_e),
                rho_y_value=float(rho_y),
            )
        )

    admissible = [p for p in points if p.admissible]
    if not admissible:
        corner = max(points, key=lambda p: p.index)
        raise InfeasiblePremiumError(
            "no admissible premium on grid",
            certificate={
                "max_corner_matrix": corner.matrix,
                "max_corner_accept_e": corner.accept_e,
                "max_corner_accept_y": corner.accept_y,
                "max_corner_rho_e": corner.rho_e_value,
                "max_corner_rho_y": corner.rho_y_value,
            },
        )

    flats = np.stack([p.matrix.ravel() for p in admissible])
    minimal_idx = []
    for k in range(flats.shape[0]):
        dominated = np.any(
            np.all(flats <= flats[k], axis=1) & np.any(flats < flats[k], axis=1)
        )
        if not dominated:
            minimal_idx.append(k)
    minimal = tuple(admissible[k].matrix for k in minimal_idx)

    def criterion_value(point: GridPoint) -> float:
        charged = point.matrix[np.arange(n_customers), point.choices]
        if criterion == "competition":
            return float(np.sum(charged))
        if criterion == "segments":
            return float(np.sum(weights * charged))
        return -float(performance(point))

    candidates = [admissible[k] for k in minimal_idx]
    values = [criterion_value(p) for p in candidates]
    best = min(values)
    tied = [
        p for p, v in zip(candidates, values) if v <= best + 1e-12
    ]
    selected = min(tied, key=lambda p: tuple(p.matrix.ravel()))
    return PremiumSearchResult(
        grid=levels,
        shape=(levels.size,) * dims,
        symmetric=symmetric,
        n_customers=n_customers,
        n_contracts=n_contracts,
        points=tuple(points),
        minimal=minimal,
        selected=selected.matrix,
        selected_value=float(criterion_value(selected)),
        criterion=criterion,
    )


def check_upward_closed(result: PremiumSearchResult) -> bool:
    """Verify that raising any admissible matrix componentwise stays admissible."""
    by_index = {p.index: p.admissible for p in result.points}
    n_levels = result.grid.size
    for p in result.points:
        if not p.admissible:
            continue
        for d in range(len(p.index)):
            neighbor = list(p.index)
            neighbor[d] += 1
            if neighbor[d] < n_levels and not by_index[tuple(neighbor)]:
                return False
    return True
