"""Arrival-count processes: time-inhomogeneous Poisson, Cox, and Hawkes.

All simulation is done by thinning against a dominating constant rate.  The
Poisson simulator and the Hawkes simulator share a single thinning loop, so
a Hawkes specification with zero kernels reduces *in code path* to plain
thinning of its baseline.  Exponential kernels allow O(1) intensity updates
between candidate points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import integrate

from .core import ModelError, Portfolio, RiskModule, SeedStream

__all__ = [
    "Intensity",
    "ConstantIntensity",
    "PiecewiseLinearIntensity",
    "GamIntensity",
    "ScaledIntensity",
    "SumIntensity",
    "expected_count",
    "aggregate_intensity",
    "simulate_poisson",
    "FactorPath",
    "DeterministicFactor",
    "OuFactor",
    "FactorModel",
    "simulate_cox",
    "cox_increment_covariance",
    "HawkesSpec",
    "HawkesPaths",
    "simulate_hawkes",
]

# Safety factor on the dominating rate used for thinning.
_THINNING_MARGIN = 1.1


class Intensity:
    """Deterministic intensity function lambda(t) >= 0, locally integrable."""

    def rate(self, t):
        raise NotImplementedError

    def integral(self, s: float, t: float) -> float:
        raise NotImplementedError

    def peak(self, s: float, t: float) -> float:
        """Exact maximum of the rate on [s, t]."""
        raise NotImplementedError

    def scaled(self, factor: float) -> "Intensity":
        if factor < 0:
            raise ValueError("scale factor must be nonnegative")
        return ScaledIntensity(self, float(factor))


@dataclass(frozen=True)
class ConstantIntensity(Intensity):
    value: float

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ValueError("intensity must be nonnegative")

    def rate(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.value)

    def integral(self, s, t):
        return self.value * (t - s)

    def peak(self, s, t):
        return self.value


@dataclass(frozen=True)
class PiecewiseLinearIntensity(Intensity):
    """Linear interpolation of tabulated rates; clamped outside the grid."""

    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.size < 2 or times.size != values.size:
            raise ValueError("need matching 1-d grids with at least 2 points")
        if np.any(np.diff(times) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(values < 0):
            raise ValueError("intensity must be nonnegative")
        object.__setattr__(self, "times", tuple(times))
        object.__setattr__(self, "values", tuple(values))

    def rate(self, t):
        return np.interp(t, self.times, self.values)

    def integral(self, s, t):
        if t < s:
            raise ValueError("negative interval")
        knots = np.array(self.times)
        inner = knots[(knots > s) & (knots < t)]
        pts = np.concatenate(([s], inner, [t]))
        vals = self.rate(pts)
        return float(np.trapezoid(vals, pts))

    def peak(self, s, t):
        knots = np.array(self.times)
        inner = knots[(knots > s) & (knots < t)]
        pts = np.concatenate(([s], inner, [t]))
        return float(np.max(self.rate(pts)))


@dataclass(frozen=True)
class GamIntensity(Intensity):
    """Additive-model form exp(f(x) + g(t)) with a tabulated time effect.

    The covariate effect enters as the scalar ``f_value`` (the model is
    attached per module, where the covariates are fixed); ``g`` is linearly
    interpolated between grid points and clamped outside.
    """

    f_value: float
    g_times: tuple[float, ...]
    g_values: tuple[float, ...]

    def __post_init__(self) -> None:
        g_times = np.asarray(self.g_times, dtype=float)
        g_values = np.asarray(self.g_values, dtype=float)
        if g_times.ndim != 1 or g_times.size < 2 or g_times.size != g_values.size:
            raise ValueError("need matching 1-d grids with at least 2 points")
        if np.any(np.diff(g_times) <= 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "g_times", tuple(g_times))
        object.__setattr__(self, "g_values", tuple(g_values))

    def rate(self, t):
        return np.exp(self.f_value + np.interp(t, self.g_times, self.g_values))

    def integral(self, s, t):
        if t < s:
            raise ValueError("negative interval")
        if t == s:
            return 0.0
        inner = [u for u in self.g_times if s < u < t]
        value, _ = integrate.quad(
            lambda u: float(self.rate(u)), s, t, points=inner, limit=200
        )
        return value

    def peak(self, s, t):
        knots = np.array(self.g_times)
        inner = knots[(knots > s) & (knots < t)]
        pts = np.concatenate(([s], inner, [t]))
        return float(np.max(self.rate(pts)))


@dataclass(frozen=True)
class ScaledIntensity(Intensity):
    base: Intensity
    factor: float

    def rate(self, t):
        return self.factor * self.base.rate(t)

    def integral(self, s, t):
        return self.factor * self.base.integral(s, t)

    def peak(self, s, t):
        return self.factor * self.base.peak(s, t)


@dataclass(frozen=True)
class SumIntensity(Intensity):
    parts: tuple[Intensity, ...]

    def rate(self, t):
        return sum(p.rate(t) for p in self.parts)

    def integral(self, s, t):
        return sum(p.integral(s, t) for p in self.parts)

    def peak(self, s, t):
        # Upper bound: sum of per-part peaks dominates the true peak, which
        # is all thinning needs; exact for constant parts.
        return sum(p.peak(s, t) for p in self.parts)


def expected_count(intensity: Intensity, s: float, t: float) -> float:
    """Expected number of arrivals on (s, t], i.e. the integrated rate."""
    if not 0 <= s <= t:
        raise ValueError("need 0 <= s <= t")
    if s == t:
        return 0.0
    return float(intensity.integral(s, t))


def aggregate_intensity(
    portfolio: Portfolio,
    module_intensities: Mapping[RiskModule, Intensity],
) -> tuple[dict[RiskModule, Intensity], dict[str, Intensity]]:
    """Aggregate per-firm module intensities to module and category level.

    The module aggregate is ``n_k * lambda_(c,k)``; the category aggregate is
    the sum of module aggregates over groups.  Both are returned as evaluable
    intensity objects.
    """
    per_module: dict[RiskModule, Intensity] = {}
    for module in portfolio.modules:
        if module not in module_intensities:
            raise ValueError(f"missing module intensity for {module.key()}")
        n_k = portfolio.group_by_id(module.group).count
        per_module[module] = module_intensities[module].scaled(n_k)
    per_category = {
        c: SumIntensity(
            tuple(per_module[m] for m in portfolio.modules if m.category == c)
        )
        for c in portfolio.categories
    }
    return per_module, per_category


# ---------------------------------------------------------------------------
# Thinning engine, shared by the Poisson and Hawkes simulators.
# ---------------------------------------------------------------------------


def _ogata_thinning(
    baselines: Sequence[Intensity],
    alpha: np.ndarray,
    beta: np.ndarray,
    horizon: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Multivariate thinning with exponential kernels.

    Returns (times, stream indices).  With all kernels zero this is exactly
    the thinning of the baselines against their constant dominating rates.
    """
    m = len(baselines)
    base_peak = np.array([b.peak(0.0, horizon) for b in baselines])
    if not np.all(np.isfinite(base_peak)):
        raise ValueError("unbounded intensity on the horizon")
    base_bound = _THINNING_MARGIN * base_peak
    if m == 1 and np.all(alpha == 0.0):
        times = _thin_single_stream(baselines[0], float(base_bound[0]), horizon, rng)
        return times, np.zeros(times.size, dtype=int)
    excitation = np.zeros((m, m))  # excitation[i, j]: events of j acting on i
    t = 0.0
    times: list[float] = []
    streams: list[int] = []
    while True:
        bound = float(np.sum(base_bound) + np.sum(excitation))
        if bound <= 0.0:
            break
        gap = rng.exponential(1.0 / bound)
        t_next = t + gap
        if t_next > horizon:
            break
        excitation *= np.exp(-beta * gap)
        t = t_next
        rates = np.array([float(b.rate(t)) for b in baselines]) + excitation.sum(
            axis=1
        )
        total = float(np.sum(rates))
        if total > bound * (1.0 + 1e-12):
            raise RuntimeError("dominating rate violated; peak computation bug")
        u = rng.uniform()
        if u * bound > total:
            continue  # rejected candidate
        if m == 1:
            source = 0
        else:
            source = int(np.searchsorted(np.cumsum(rates), rng.uniform() * total))
            source = min(source, m - 1)
        times.append(t)
        streams.append(source)
        excitation[:, source] += alpha[:, source]
    return np.array(times), np.array(streams, dtype=int)


def _thin_single_stream(
    baseline: Intensity, bound: float, horizon: float, rng: np.random.Generator
) -> np.ndarray:
    """Vectorized thinning of a single unexcited stream (blocked draws)."""
    if bound <= 0.0:
        return np.array([])
    t = 0.0
    accepted: list[np.ndarray] = []
    block = 512
    while t <= horizon:
        candidates = t + np.cumsum(rng.exponential(1.0 / bound, size=block))
        u = rng.uniform(size=block)
        inside = candidates <= horizon
        rates = np.asarray(baseline.rate(candidates[inside]), dtype=float)
        if np.any(rates > bound * (1.0 + 1e-12)):
            raise RuntimeError("dominating rate violated; peak computation bug")
        accepted.append(candidates[inside][u[: int(inside.sum())] * bound <= rates])
        if not inside.all():
            break
        t = float(candidates[-1])
    return np.concatenate(accepted) if accepted else np.array([])


def simulate_poisson(
    intensity: Intensity, horizon: float, seed: SeedStream
) -> np.ndarray:
    """Arrival times of an inhomogeneous Poisson process on [0, horizon]."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    rng = seed.generator()
    times, _ = _ogata_thinning(
        [intensity], np.zeros((1, 1)), np.ones((1, 1)), horizon, rng
    )
    return times


# ---------------------------------------------------------------------------
# Cox processes driven by a factor path.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FactorPath:
    """Realized d-dimensional factor trajectory on a strictly increasing grid."""

    times: np.ndarray
    values: np.ndarray  # shape (len(times), d)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if values.shape[0] != times.size:
            values = values.T
        if values.shape[0] != times.size:
            raise ValueError("grid and values misaligned")
        if np.any(np.diff(times) <= 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class DeterministicFactor:
    """A fixed factor path (degenerate randomness)."""

    path: FactorPath

    def simulate(self, rng: np.random.Generator) -> FactorPath:
        return self.path

    @property
    def times(self) -> np.ndarray:
        return self.path.times


@dataclass(frozen=True)
class OuFactor:
    """Mean-reverting diffusion dX = speed (level - X) dt + vol dW, Euler-discretized.

    All parameters may be scalars (one factor) or length-d arrays.
    """

    speed: tuple[float, ...]
    level: tuple[float, ...]
    vol: tuple[float, ...]
    x0: tuple[float, ...]
    grid: tuple[float, ...]

    def __post_init__(self) -> None:
        speed = np.atleast_1d(np.asarray(self.speed, dtype=float))
        level = np.atleast_1d(np.asarray(self.level, dtype=float))
        vol = np.atleast_1d(np.asarray(self.vol, dtype=float))
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        d = max(arr.size for arr in (speed, level, vol, x0))
        speed, level, vol, x0 = (
            np.broadcast_to(arr, (d,)).copy() for arr in (speed, level, vol, x0)
        )
        if np.any(speed <= 0):
            raise ValueError("mean-reversion speed must be positive")
        if np.any(vol < 0):
            raise ValueError("volatility must be nonnegative")
        grid = np.asarray(self.grid, dtype=float)
        if grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing with >= 2 points")
        object.__setattr__(self, "speed", tuple(speed))
        object.__setattr__(self, "level", tuple(level))
        object.__setattr__(self, "vol", tuple(vol))
        object.__setattr__(self, "x0", tuple(x0))
        object.__setattr__(self, "grid", tuple(grid))

    @property
    def times(self) -> np.ndarray:
        return np.array(self.grid)

    def simulate(self, rng: np.random.Generator) -> FactorPath:
        grid = np.array(self.grid)
        speed = np.array(self.speed)
        level = np.array(self.level)
        vol = np.array(self.vol)
        d = speed.size
        values = np.empty((grid.size, d))
        values[0] = np.array(self.x0)
        dt = np.diff(grid)
        shocks = rng.standard_normal((grid.size - 1, d))
        for k in range(grid.size - 1):
            x = values[k]
            values[k + 1] = (
                x + speed * (level - x) * dt[k] + vol * np.sqrt(dt[k]) * shocks[k]
            )
        return FactorPath(times=grid, values=values)


@dataclass(frozen=True)
class FactorModel:
    """Factor dynamics plus a nonnegative link mapping the state to a rate."""

    dynamics: DeterministicFactor | OuFactor
    link: Callable[[np.ndarray], float]

    def intensity_from_path(self, path: FactorPath) -> PiecewiseLinearIntensity:
        rates = np.array([float(self.link(x)) for x in path.values])
        if np.any(rates < 0):
            raise ModelError("link produced negative intensity")
        return PiecewiseLinearIntensity(tuple(path.times), tuple(rates))

    def simulate_intensity(
        self, rng: np.random.Generator
    ) -> tuple[FactorPath, PiecewiseLinearIntensity]:
        path = self.dynamics.simulate(rng)
        return path, self.intensity_from_path(path)


def simulate_cox(
    factors: FactorModel, horizon: float, seed: SeedStream
) -> tuple[FactorPath, np.ndarray]:
    """Draw a factor path, then arrivals conditionally Poisson given the path."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if factors.dynamics.times[-1] < horizon:
        raise ValueError("factor grid does not cover the horizon")
    path, intensity = factors.simulate_intensity(seed.child(0).generator())
    times = simulate_poisson(intensity, horizon, seed.child(1))
    return path, times


def cox_increment_covariance(
    factors: FactorModel,
    intervals: tuple[float, float, float, float],
    n_reps: int,
    seed: SeedStream,
) -> tuple[float, float]:
    """Monte Carlo estimate of Cov(int_s^t lambda, int_u^v lambda) with its SE.

    By the tower property this equals the covariance of the counts on the two
    disjoint intervals minus the Poisson noise, so it isolates the dependence
    contributed by the random intensity.
    """
    s, t, u, v = intervals
    if not (s < t <= u < v):
        raise ValueError("need s < t <= u < v (disjoint ordered intervals)")
    if factors.dynamics.times[-1] < v:
        raise ValueError("factor grid does not cover the intervals")
    first = np.empty(n_reps)
    second = np.empty(n_reps)
    for r in range(n_reps):
        _, intensity = factors.simulate_intensity(seed.child(r).generator())
        first[r] = intensity.integral(s, t)
        second[r] = intensity.integral(u, v)
    if np.ptp(first) == 0.0 or np.ptp(second) == 0.0:
        return 0.0, 0.0  # degenerate path: covariance vanishes identically
    prods = (first - first.mean()) * (second - second.mean())
    cov = float(np.sum(prods) / (n_reps - 1))
    se = float(np.std(prods, ddof=1) / np.sqrt(n_reps))
    return cov, se


# ---------------------------------------------------------------------------
# Multivariate Hawkes with exponential kernels.
# ---------------------------------------------------------------------------

_MAX_HAWKES_STREAMS = 10_000


@dataclass(frozen=True)
class HawkesSpec:
    """Mutually exciting arrival streams with kernels alpha * exp(-beta t).

    ``alpha[i, j]`` / ``beta[i, j]`` parameterize the influence of events in
    stream ``j`` on the intensity of stream ``i``.  ``counts`` gives the
    number of exchangeable firms per stream; per-firm baselines and kernels
    are expanded internally (aggregate baseline ``n_k mu_k``, aggregate jump
    ``n_k alpha_kl``) and events are attributed to firms uniformly.
    """

    labels: tuple[str, ...]
    baselines: tuple[Intensity, ...]
    alpha: np.ndarray
    beta: np.ndarray
    counts: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        m = len(self.labels)
        alpha = np.asarray(self.alpha, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        if alpha.shape != (m, m) or beta.shape != (m, m):
            raise ValueError("kernel matrices must be (n_streams, n_streams)")
        if len(self.baselines) != m:
            raise ValueError("one baseline per stream required")
        if np.any(alpha < 0):
            raise ValueError("kernel jump alpha must be nonnegative")
        if np.any(beta <= 0):
            raise ValueError("kernel decay beta must be positive")
        counts = self.counts
        if counts is not None:
            counts = tuple(int(c) for c in counts)
            if len(counts) != m or any(c < 1 for c in counts):
                raise ValueError("counts must give a positive firm count per stream")
            if sum(counts) > _MAX_HAWKES_STREAMS:
                raise ModelError(
                    f"firm-level stream count exceeds {_MAX_HAWKES_STREAMS}"
                )
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "counts", counts)
        radius = self.branching_radius()
        if radius >= 1.0:
            raise ModelError(
                f"explosive specification: branching spectral radius {radius:.6g} >= 1"
            )

    def branching_radius(self) -> float:
        branching = self.alpha / self.beta
        if self.counts is not None:
            branching = branching * np.asarray(self.counts, dtype=float)[None, :]
        return float(np.max(np.abs(np.linalg.eigvals(branching))))

    def _aggregate(self) -> tuple[list[Intensity], np.ndarray, np.ndarray]:
        if self.counts is None:
            return list(self.baselines), self.alpha, self.beta
        n = np.asarray(self.counts, dtype=float)
        baselines = [b.scaled(c) for b, c in zip(self.baselines, n)]
        return baselines, self.alpha * n[:, None], self.beta


@dataclass(frozen=True)
class HawkesPaths:
    """Simulated event stream: times with stream and firm attribution."""

    labels: tuple[str, ...]
    times: np.ndarray
    streams: np.ndarray
    firms: np.ndarray

    def times_for(self, label: str, firm: int | None = None) -> np.ndarray:
        idx = self.labels.index(label)
        mask = self.streams == idx
        if firm is not None:
            mask &= self.firms == firm
        return self.times[mask]


def simulate_hawkes(
    spec: HawkesSpec, horizon: float, seed: SeedStream
) -> HawkesPaths:
    """Simulate the multivariate Hawkes process by Ogata thinning."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    rng = seed.generator()
    baselines, alpha, beta = spec._aggregate()
    times, streams = _ogata_thinning(baselines, alpha, beta, horizon, rng)
    if spec.counts is None:
        firms = np.zeros(times.size, dtype=int)
    else:
        counts = np.asarray(spec.counts)
        firms = np.array(
            [rng.integers(counts[s]) for s in streams], dtype=int
        )
    return HawkesPaths(labels=spec.labels, times=times, streams=streams, firms=firms)
