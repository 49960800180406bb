"""Claim-size distributions, including the body/tail composite construction.

Claim sizes are nonnegative, so the plain normal family is replaced by a
normal truncated at zero.  A composite distribution glues a body density
below a threshold to a tail density above it, with the two normalizing
weights pinned down by total mass and density continuity at the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, optimize, stats

from .core import ModelError, SeedStream

__all__ = [
    "Severity",
    "LognormalSeverity",
    "GammaSeverity",
    "PertSeverity",
    "GpdSeverity",
    "BetaSeverity",
    "TruncatedNormalSeverity",
    "KernelSeverity",
    "FixedSeverity",
    "CompositeSeverity",
    "solve_composite_normalizers",
    "sample_severity",
]


class Severity:
    """Nonnegative claim-size distribution: pdf/cdf/quantile/mean/sampling."""

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def ppf(self, u):
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        return 0.0, np.inf

    @property
    def infinite_mean(self) -> bool:
        return not np.isfinite(self.mean())

    def sample(self, n: int, seed: SeedStream) -> np.ndarray:
        if n < 1:
            raise ValueError("sample size must be >= 1")
        return self.ppf(seed.generator().random(n))


class _ScipySeverity(Severity):
    """Severity backed by a frozen scipy distribution (set ``_dist``)."""

    _dist: stats.rv_continuous

    def pdf(self, x):
        return self._dist.pdf(x)

    def cdf(self, x):
        return self._dist.cdf(x)

    def ppf(self, u):
        return self._dist.ppf(u)

    def mean(self) -> float:
        return float(self._dist.mean())

    def support(self) -> tuple[float, float]:
        lo, hi = self._dist.support()
        return float(lo), float(hi)


@dataclass(frozen=True)
class LognormalSeverity(_ScipySeverity):
    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        object.__setattr__(
            self, "_dist", stats.lognorm(s=self.sigma, scale=np.exp(self.mu))
        )


@dataclass(frozen=True)
class GammaSeverity(_ScipySeverity):
    shape: float
    scale: float

    def __post_init__(self) -> None:
        if self.shape <= 0 or self.scale <= 0:
            raise ValueError("shape and scale must be positive")
        object.__setattr__(self, "_dist", stats.gamma(a=self.shape, scale=self.scale))


@dataclass(frozen=True)
class PertSeverity(_ScipySeverity):
    """PERT(min, mode, max): a scaled Beta with the standard shape mapping."""

    minimum: float
    mode: float
    maximum: float

    def __post_init__(self) -> None:
        if not self.minimum <= self.mode <= self.maximum:
            raise ValueError("need minimum <= mode <= maximum")
        if self.maximum <= self.minimum:
            raise ValueError("degenerate PERT range")
        if self.minimum < 0:
            raise ValueError("claim sizes are nonnegative")
        span = self.maximum - self.minimum
        a = 1.0 + 4.0 * (self.mode - self.minimum) / span
        b = 1.0 + 4.0 * (self.maximum - self.mode) / span
        object.__setattr__(
            self, "_dist", stats.beta(a, b, loc=self.minimum, scale=span)
        )


@dataclass(frozen=True)
class GpdSeverity(_ScipySeverity):
    """Generalized Pareto; xi = 0 is the exponential limit, xi < 0 bounded."""

    xi: float
    sigma: float
    loc: float = 0.0

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("GPD scale must be positive")
        if self.loc < 0:
            raise ValueError("claim sizes are nonnegative")
        object.__setattr__(
            self, "_dist", stats.genpareto(c=self.xi, loc=self.loc, scale=self.sigma)
        )


@dataclass(frozen=True)
class BetaSeverity(_ScipySeverity):
    """Beta on [0, 1]; reserved for data-loss fractions."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if self.a <= 0 or self.b <= 0:
            raise ValueError("beta parameters must be positive")
        object.__setattr__(self, "_dist", stats.beta(self.a, self.b))


@dataclass(frozen=True)
class TruncatedNormalSeverity(_ScipySeverity):
    """Normal truncated at zero (claim sizes must be nonnegative)."""

    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        a = (0.0 - self.mu) / self.sigma
        object.__setattr__(
            self, "_dist", stats.truncnorm(a, np.inf, loc=self.mu, scale=self.sigma)
        )


@dataclass(frozen=True)
class FixedSeverity(Severity):
    """Degenerate claim size (useful for oracles and smoke configs)."""

    value: float

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ValueError("claim sizes are nonnegative")

    def pdf(self, x):
        raise ModelError("degenerate distribution has no density")

    def cdf(self, x):
        return np.where(np.asarray(x, dtype=float) >= self.value, 1.0, 0.0)

    def ppf(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.value)

    def mean(self) -> float:
        return self.value

    def support(self) -> tuple[float, float]:
        return self.value, self.value


class KernelSeverity(Severity):
    """Gaussian kernel estimate with Silverman bandwidth, reflected at 0."""

    def __init__(self, data: Sequence[float]):
        data = np.asarray(data, dtype=float)
        if data.ndim != 1 or data.size < 2:
            raise ValueError("need a 1-d sample with at least 2 points")
        if np.any(data < 0):
            raise ValueError("claim sizes are nonnegative")
        self.data = data
        n = data.size
        sd = float(np.std(data, ddof=1))
        iqr = float(np.subtract(*np.percentile(data, [75, 25])))
        scale = min(sd, iqr / 1.34) if iqr > 0 else sd
        if scale <= 0:
            raise ValueError("sample has no spread")
        self.bandwidth = 0.9 * scale * n ** (-0.2)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x[..., None] - self.data) / self.bandwidth
        zr = (x[..., None] + self.data) / self.bandwidth
        dens = (stats.norm.pdf(z) + stats.norm.pdf(zr)).mean(axis=-1) / self.bandwidth
        return np.where(x < 0, 0.0, dens)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x[..., None] - self.data) / self.bandwidth
        zr = (-x[..., None] - self.data) / self.bandwidth
        vals = (stats.norm.cdf(z) - stats.norm.cdf(zr)).mean(axis=-1)
        return np.clip(np.where(x < 0, 0.0, vals), 0.0, 1.0)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        hi = float(np.max(self.data) + 10 * self.bandwidth)
        scalar = u.ndim == 0

        def invert(ui):
            if not 0 < ui < 1:
                raise ValueError("quantile level must lie in (0, 1)")
            upper = hi
            while self.cdf(upper) < ui:
                upper *= 2.0
            return optimize.brentq(lambda y: float(self.cdf(y)) - ui, 0.0, upper)

        out = np.array([invert(ui) for ui in np.atleast_1d(u)])
        return float(out[0]) if scalar else out

    def mean(self) -> float:
        # Reflected-kernel mean has a closed form in terms of normal moments.
        h, d = self.bandwidth, self.data
        z = d / h
        return float(np.mean(d * (2 * stats.norm.cdf(z) - 1) + 2 * h * stats.norm.pdf(z)))

    def sample(self, n: int, seed: SeedStream) -> np.ndarray:
        if n < 1:
            raise ValueError("sample size must be >= 1")
        rng = seed.generator()
        centers = rng.choice(self.data, size=n, replace=True)
        return np.abs(centers + self.bandwidth * rng.standard_normal(n))


def solve_composite_normalizers(
    body: Severity, tail: Severity, threshold: float
) -> tuple[float, float]:
    """Solve for (C1, C2) satisfying total mass 1 and density continuity.

    The two linear constraints are ``C1 F_body(th) + C2 (1 - F_tail(th)) = 1``
    and ``C1 f_body(th) = C2 f_tail(th)``; the solution is unique whenever
    both densities are positive at the threshold.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    a = float(body.pdf(threshold))
    b = float(tail.pdf(threshold))
    if not (np.isfinite(a) and np.isfinite(b)) or a <= 0 or b <= 0:
        raise ModelError("continuity unsolvable at threshold")
    p = float(body.cdf(threshold))
    q = 1.0 - float(tail.cdf(threshold))
    denom = p * b + q * a
    if denom <= 0:
        raise ModelError("continuity unsolvable at threshold")
    return b / denom, a / denom


class CompositeSeverity(Severity):
    """Body density below the threshold, tail density above, glued continuously."""

    def __init__(self, body: Severity, tail: Severity, threshold: float):
        self.body = body
        self.tail = tail
        self.threshold = float(threshold)
        self.c1, self.c2 = solve_composite_normalizers(body, tail, threshold)
        self.body_mass = self.c1 * float(body.cdf(threshold))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(
            x <= self.threshold, self.c1 * self.body.pdf(x), self.c2 * self.tail.pdf(x)
        )

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        below = self.c1 * self.body.cdf(np.minimum(x, self.threshold))
        above = self.c2 * np.clip(
            self.tail.cdf(x) - self.tail.cdf(self.threshold), 0.0, None
        )
        return np.clip(below + np.where(x > self.threshold, above, 0.0), 0.0, 1.0)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0) | (u >= 1)):
            raise ValueError("quantile level must lie in (0, 1)")
        t_at_theta = float(self.tail.cdf(self.threshold))
        body_u = np.clip(u, None, self.body_mass) / self.c1
        body_q = self.body.ppf(np.clip(body_u, 1e-300, 1.0))
        tail_u = t_at_theta + (u - self.body_mass) / self.c2
        tail_q = self.tail.ppf(np.clip(tail_u, 0.0, 1.0))
        return np.where(u <= self.body_mass, body_q, tail_q)

    def mean(self) -> float:
        lo, _ = self.body.support()
        first, _ = integrate.quad(
            lambda y: y * self.c1 * float(self.body.pdf(y)), lo, self.threshold,
            limit=200,
        )
        _, hi = self.tail.support()
        upper = min(hi, np.inf)
        second, _ = integrate.quad(
            lambda y: y * self.c2 * float(self.tail.pdf(y)), self.threshold, upper,
            limit=200,
        )
        return first + second

    def support(self) -> tuple[float, float]:
        lo, _ = self.body.support()
        _, hi = self.tail.support()
        return min(lo, self.threshold), hi

    def sample(self, n: int, seed: SeedStream) -> np.ndarray:
        if n < 1:
            raise ValueError("sample size must be >= 1")
        rng = seed.generator()
        pick_tail = rng.random(n) >= self.body_mass
        v = rng.random(n)
        t_at_theta = float(self.tail.cdf(self.threshold))
        body_p = float(self.body.cdf(self.threshold))
        out = np.empty(n)
        out[~pick_tail] = self.body.ppf(v[~pick_tail] * body_p)
        out[pick_tail] = self.tail.ppf(
            t_at_theta + v[pick_tail] * (1.0 - t_at_theta)
        )
        return out


def sample_severity(dist: Severity, n: int, seed: SeedStream) -> np.ndarray:
    """Draw ``n`` i.i.d. claim sizes from any severity distribution."""
    return dist.sample(n, seed)
