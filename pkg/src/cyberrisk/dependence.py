"""Copulas: construction, evaluation, sampling, and joint-model assembly.

Archimedean families (Gumbel, Clayton) are evaluated in closed form and
sampled through their Laplace-transform mixture representation; Gaussian and
Student-t copulas are sampled by transforming a factorized covariance draw
and evaluated through the numerically integrated multivariate cdf.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .core import SeedStream
from .severity import Severity

__all__ = [
    "Copula",
    "IndependenceCopula",
    "GaussianCopula",
    "StudentTCopula",
    "GumbelCopula",
    "ClaytonCopula",
    "JointModel",
    "copula_cdf",
    "sample_copula",
    "sample_joint",
    "coupled_frequency_severity",
    "CoupledPeriods",
]

# Numerical cdf evaluation of the implicit copulas is capped in dimension.
_MAX_IMPLICIT_DIM = 10


class Copula:
    """Distribution on the unit cube with uniform margins."""

    dim: int

    def cdf(self, u) -> float:
        raise NotImplementedError

    def sample_rng(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def sample(self, n: int, seed: SeedStream) -> np.ndarray:
        return self.sample_rng(n, seed.generator())

    def _clean_point(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,):
            raise ValueError(f"point must have dimension {self.dim}")
        if np.any((u < 0) | (u > 1)):
            raise ValueError("point must lie in the unit cube")
        return u


def _validate_corr(corr: np.ndarray, dim: int) -> np.ndarray:
    corr = np.asarray(corr, dtype=float)
    if corr.shape != (dim, dim):
        raise ValueError("correlation matrix shape mismatch")
    if not np.allclose(corr, corr.T, atol=1e-12):
        raise ValueError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(corr), 1.0, atol=1e-12):
        raise ValueError("correlation matrix must have unit diagonal")
    eigvals = np.linalg.eigvalsh(corr)
    if eigvals.min() < -1e-10:
        raise ValueError("correlation matrix must be positive semidefinite")
    return corr


def _corr_factor(corr: np.ndarray) -> np.ndarray:
    """Cholesky factor with an eigenvalue fallback for semidefinite input."""
    try:
        return np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(corr)
        return v @ np.diag(np.sqrt(np.clip(w, 0.0, None)))


@dataclass(frozen=True)
class IndependenceCopula(Copula):
    dim: int

    def cdf(self, u) -> float:
        return float(np.prod(self._clean_point(u)))

    def sample_rng(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.random((n, self.dim))


@dataclass(frozen=True)
class GaussianCopula(Copula):
    corr: np.ndarray

    def __post_init__(self) -> None:
        corr = np.atleast_2d(np.asarray(self.corr, dtype=float))
        object.__setattr__(self, "corr", _validate_corr(corr, corr.shape[0]))

    @property
    def dim(self) -> int:
        return self.corr.shape[0]

    def cdf(self, u) -> float:
        u = self._clean_point(u)
        if np.any(u == 0.0):
            return 0.0
        active = u < 1.0  # margins at 1 integrate out exactly
        if not np.any(active):
            return 1.0
        sub = self.corr[np.ix_(active, active)]
        z = stats.norm.ppf(u[active])
        if z.size == 1:
            return float(u[active][0])
        if np.allclose(sub, np.eye(z.size), atol=1e-14):
            return float(np.prod(u[active]))
        if z.size > _MAX_IMPLICIT_DIM:
            raise ValueError(f"cdf evaluation capped at dimension {_MAX_IMPLICIT_DIM}")
        return float(stats.multivariate_normal(cov=sub, allow_singular=True).cdf(z))

    def sample_rng(self, n: int, rng: np.random.Generator) -> np.ndarray:
        factor = _corr_factor(self.corr)
        z = rng.standard_normal((n, self.dim)) @ factor.T
        return stats.norm.cdf(z)


@dataclass(frozen=True)
class StudentTCopula(Copula):
    df: float
    corr: np.ndarray

    def __post_init__(self) -> None:
        if self.df <= 0:
            raise ValueError("degrees of freedom must be positive")
        corr = np.atleast_2d(np.asarray(self.corr, dtype=float))
        object.__setattr__(self, "corr", _validate_corr(corr, corr.shape[0]))

    @property
    def dim(self) -> int:
        return self.corr.shape[0]

    def cdf(self, u) -> float:
        u = self._clean_point(u)
        if np.any(u == 0.0):
            return 0.0
        active = u < 1.0
        if not np.any(active):
            return 1.0
        z = stats.t.ppf(u[active], df=self.df)
        if z.size == 1:
            return float(u[active][0])
        if z.size > _MAX_IMPLICIT_DIM:
            raise ValueError(f"cdf evaluation capped at dimension {_MAX_IMPLICIT_DIM}")
        sub = self.corr[np.ix_(active, active)]
        dist = stats.multivariate_t(shape=sub, df=self.df)
        # The QMC integration is randomized; pin its stream for determinism.
        return float(dist.cdf(z, random_state=np.random.default_rng(0), maxpts=200_000))

    def sample_rng(self, n: int, rng: np.random.Generator) -> np.ndarray:
        factor = _corr_factor(self.corr)
        z = rng.standard_normal((n, self.dim)) @ factor.T
        w = rng.chisquare(self.df, size=n) / self.df
        return stats.t.cdf(z / np.sqrt(w)[:, None], df=self.df)


@dataclass(frozen=True)
class GumbelCopula(Copula):
    """Archimedean copula with generator (-ln s)^theta, theta >= 1."""

    theta: float
    dim: int = 2

    def __post_init__(self) -> None:
        if self.theta < 1:
            raise ValueError("Gumbel theta must satisfy theta >= 1")
        if self.dim < 2:
            raise ValueError("copula dimension must be >= 2")

    def cdf(self, u) -> float:
        u = self._clean_point(u)
        if np.any(u == 0.0):
            return 0.0
        with np.errstate(divide="ignore"):
            s = np.sum((-np.log(u)) ** self.theta)
        return float(np.exp(-(s ** (1.0 / self.theta))))

    def sample_rng(self, n: int, rng: np.random.Generator) -> np.ndarray:
        e = rng.exponential(size=(n, self.dim))
        if self.theta == 1.0:
            return np.exp(-e)
        # Positive stable mixing variable via Chambers-Mallows-Stuck.
        alpha = 1.0 / self.theta
        v = rng.uniform(0.0, np.pi, size=n)
        w = rng.exponential(size=n)
        s = (np.sin(alpha * v) / np.sin(v) ** (1.0 / alpha)) * (
            np.sin((1.0 - alpha) * v) / w
        ) ** ((1.0 - alpha) / alpha)
        return np.exp(-((e / s[:, None]) ** alpha))


@dataclass(frozen=True)
class ClaytonCopula(Copula):
    theta: float
    dim: int = 2

    def __post_init__(self) -> None:
        if self.theta <= 0:
            raise ValueError("Clayton theta must be positive")
        if self.dim < 2:
            raise ValueError("copula dimension must be >= 2")

    def cdf(self, u) -> float:
        u = self._clean_point(u)
        if np.any(u == 0.0):
            return 0.0
        s = np.sum(u ** (-self.theta)) - self.dim + 1.0
        return float(max(s, 0.0) ** (-1.0 / self.theta))

    def sample_rng(self, n: int, rng: np.random.Generator) -> np.ndarray:
        e = rng.exponential(size=(n, self.dim))
        g = rng.gamma(1.0 / self.theta, 1.0, size=n)
        return (1.0 + e / g[:, None]) ** (-1.0 / self.theta)


@dataclass(frozen=True)
class JointModel:
    """Sklar assembly: a copula plus one marginal distribution per coordinate."""

    copula: Copula
    marginals: tuple

    def __post_init__(self) -> None:
        if len(self.marginals) != self.copula.dim:
            raise ValueError("need one marginal per copula dimension")
        for m in self.marginals:
            if not hasattr(m, "ppf"):
                raise ValueError("marginals must expose a quantile (ppf)")


def copula_cdf(copula: Copula, u) -> float:
    """Evaluate the copula distribution function at a point of the unit cube."""
    return copula.cdf(u)


def sample_copula(copula: Copula, n: int, seed: SeedStream) -> np.ndarray:
    """Draw ``n`` points with uniform margins and the copula's dependence."""
    if n < 1:
        raise ValueError("sample size must be >= 1")
    return copula.sample(n, seed)


def sample_joint(jm: JointModel, n: int, seed: SeedStream) -> np.ndarray:
    """Sample the joint law: marginal quantiles applied to copula coordinates."""
    u = sample_copula(jm.copula, n, seed)
    cols = [np.asarray(m.ppf(u[:, k]), dtype=float) for k, m in enumerate(jm.marginals)]
    return np.column_stack(cols)


@dataclass(frozen=True)
class CoupledPeriods:
    """Per-period output of the frequency-severity coupling."""

    counts: np.ndarray
    scales: np.ndarray
    sizes: list

    def totals(self) -> np.ndarray:
        return np.array([float(np.sum(s)) for s in self.sizes])


def coupled_frequency_severity(
    count_dist,
    severity: Severity,
    copula: GumbelCopula,
    n_periods: int,
    seed: SeedStream,
) -> CoupledPeriods:
    """Couple claim counts and claim sizes through a Gumbel copula.

    Per period, a copula draw (u1, u2) sets the count via the count quantile
    and a latent severity level via the severity quantile; the latent level
    acts as a common per-period scale multiplying i.i.d. unit-mean severity
    draws.  Large-count periods therefore also tend to carry large claims.
    """
    if not isinstance(copula, GumbelCopula) or copula.dim != 2:
        raise ValueError("coupling requires a bivariate Gumbel copula")
    if not hasattr(count_dist, "ppf"):
        raise ValueError("count distribution must expose a quantile (ppf)")
    sev_mean = severity.mean()
    if not np.isfinite(sev_mean) or sev_mean <= 0:
        raise ValueError("severity needs a finite positive mean for unit scaling")
    u = sample_copula(copula, n_periods, seed.child(0))
    counts = np.asarray(count_dist.ppf(u[:, 0]), dtype=float).astype(int)
    scales = np.asarray(severity.ppf(u[:, 1]), dtype=float)
    sizes = []
    for k in range(n_periods):
        if counts[k] <= 0:
            sizes.append(np.empty(0))
            continue
        draws = severity.sample(int(counts[k]), seed.child(1 + k))
        sizes.append(scales[k] * draws / sev_mean)
    return CoupledPeriods(counts=counts, scales=scales, sizes=sizes)
