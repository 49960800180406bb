"""Collective risk model: compound total-claim simulation and Wald moments.

The empirical :class:`LossSample` is the sole interchange format toward the
pricing layer; simulated and user-supplied losses share the same surface.
Replications use derived substreams indexed by replication and module key,
so results are independent of evaluation order and portfolio composition
changes leave untouched modules bit-identical.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import stats

from .core import ModelError, Portfolio, RiskModule, SeedStream
from .dependence import GumbelCopula, coupled_frequency_severity
from .frequency import (
    FactorModel,
    FactorPath,
    HawkesSpec,
    Intensity,
    simulate_hawkes,
    simulate_poisson,
)
from .severity import Severity

__all__ = [
    "LossSample",
    "PoissonFrequency",
    "CoxFrequency",
    "SharedFactorFrequency",
    "HawkesFrequency",
    "CollectiveModel",
    "wald_moments",
    "simulate_total",
    "PortfolioSample",
    "portfolio_total",
]


@dataclass(frozen=True)
class LossSample:
    """Empirical distribution of end-of-period totals with provenance."""

    values: np.ndarray
    horizon: float
    label: str = ""
    seed_trace: str = ""

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("loss sample must be one-dimensional")
        if not np.all(np.isfinite(values)):
            raise ValueError("loss sample must be finite")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    def mean(self) -> float:
        return float(np.mean(self.values))

    def var(self, ddof: int = 1) -> float:
        return float(np.var(self.values, ddof=ddof))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("replication,value\n")
        for i, v in enumerate(self.values):
            buf.write(f"{i},{v:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, horizon: float = 1.0, label: str = "") -> "LossSample":
        lines = [ln for ln in text.strip().splitlines() if ln]
        if not lines or lines[0].split(",")[:2] != ["replication", "value"]:
            raise ValueError("expected header 'replication,value'")
        values = np.array([float(ln.split(",")[1]) for ln in lines[1:]])
        return cls(values=values, horizon=horizon, label=label)

    def to_json(self) -> str:
        return json.dumps(
            {
                "horizon": self.horizon,
                "label": self.label,
                "seed_trace": self.seed_trace,
                "values": [float(v) for v in self.values],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "LossSample":
        obj = json.loads(text)
        return cls(
            values=np.asarray(obj["values"], dtype=float),
            horizon=float(obj["horizon"]),
            label=obj.get("label", ""),
            seed_trace=obj.get("seed_trace", ""),
        )


def wald_moments(
    freq_mean: float, freq_var: float, sev_mean: float, sev_var: float
) -> tuple[float, float]:
    """Mean and variance of a random sum with independent count and sizes."""
    if freq_var < 0 or sev_var < 0:
        raise ValueError("variances must be nonnegative")
    mean = freq_mean * sev_mean
    var = freq_mean * sev_var + freq_var * sev_mean**2
    return mean, var


# ---------------------------------------------------------------------------
# Frequency wrappers usable inside a collective model.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PoissonFrequency:
    intensity: Intensity

    def arrivals(self, horizon: float, seed: SeedStream) -> np.ndarray:
        return simulate_poisson(self.intensity, horizon, seed)

    def count_distribution(self, horizon: float):
        return stats.poisson(mu=self.intensity.integral(0.0, horizon))


@dataclass(frozen=True)
class CoxFrequency:
    """Cox arrivals driven by the module's own factor model."""

    factors: FactorModel

    def arrivals(self, horizon: float, seed: SeedStream) -> np.ndarray:
        path, intensity = self.factors.simulate_intensity(seed.child(0).generator())
        return simulate_poisson(intensity, horizon, seed.child(1))


@dataclass(frozen=True)
class SharedFactorFrequency:
    """Conditionally Poisson given a portfolio-wide shared factor path."""

    link: object  # callable state -> nonnegative rate

    def arrivals_given_path(
        self, path: FactorPath, horizon: float, seed: SeedStream
    ) -> np.ndarray:
        rates = np.array([float(self.link(x)) for x in path.values])
        if np.any(rates < 0):
            raise ModelError("link produced negative intensity")
        from .frequency import PiecewiseLinearIntensity

        intensity = PiecewiseLinearIntensity(tuple(path.times), tuple(rates))
        return simulate_poisson(intensity, horizon, seed)


@dataclass(frozen=True)
class HawkesFrequency:
    spec: HawkesSpec

    def arrivals(self, horizon: float, seed: SeedStream) -> np.ndarray:
        return simulate_hawkes(self.spec, horizon, seed).times


@dataclass(frozen=True)
class CollectiveModel:
    """Frequency plus severity, with an optional Gumbel coupling between them."""

    frequency: object
    severity: Severity
    coupling: GumbelCopula | None = None

    def __post_init__(self) -> None:
        if self.coupling is not None:
            if not isinstance(self.frequency, PoissonFrequency):
                raise ValueError(
                    "coupled mode needs a Poisson frequency (closed-form count quantile)"
                )


def _replication_total(
    model: CollectiveModel,
    horizon: float,
    rep_seed: SeedStream,
    shared_path: FactorPath | None = None,
) -> float:
    if model.coupling is not None:
        count_dist = model.frequency.count_distribution(horizon)
        periods = coupled_frequency_severity(
            count_dist, model.severity, model.coupling, 1, rep_seed
        )
        return float(periods.totals()[0])
    freq = model.frequency
    if isinstance(freq, SharedFactorFrequency):
        if shared_path is None:
            raise ValueError("shared-factor frequency needs a portfolio factor path")
        times = freq.arrivals_given_path(shared_path, horizon, rep_seed.child(0))
    else:
        times = freq.arrivals(horizon, rep_seed.child(0))
    if times.size == 0:
        return 0.0
    draws = model.severity.sample(times.size, rep_seed.child(1))
    return float(np.sum(draws))


def simulate_total(
    model: CollectiveModel, horizon: float, n_reps: int, seed: SeedStream
) -> LossSample:
    """Simulate end-of-period total claims, one value per replication."""
    if n_reps < 1:
        raise ValueError("need at least one replication")
    values = np.empty(n_reps)
    for r in range(n_reps):
        values[r] = _replication_total(model, horizon, seed.child(r))
    return LossSample(
        values=values, horizon=horizon, label="total-claims", seed_trace=seed.trace()
    )


@dataclass(frozen=True)
class PortfolioSample:
    """Portfolio aggregate plus per-module samples and factor-cell tags."""

    total: LossSample
    per_module: dict
    factor_tags: np.ndarray
    factor_paths: tuple = field(default_factory=tuple)


def portfolio_total(
    portfolio: Portfolio,
    models: Mapping[RiskModule, CollectiveModel],
    shared_factors: FactorModel | None,
    horizon: float,
    n_reps: int,
    seed: SeedStream,
    n_factor_cells: int | None = None,
) -> PortfolioSample:
    """Simulate the portfolio: shared factor path first, then modules.

    Module models describe the module *aggregate* arrival process (use
    :func:`cyberrisk.frequency.aggregate_intensity` to scale per-firm rates
    by group counts).  Conditional on the replication's shared factor path,
    modules are simulated independently on substreams keyed by module id.

    ``n_factor_cells`` restricts the shared factor to a finite pool of
    pre-simulated paths cycled across replications, which gives every factor
    cell several replications (needed by the conditional decomposition in
    the pricing layer).
    """
    if n_reps < 1:
        raise ValueError("need at least one replication")
    missing = [m.key() for m in portfolio.modules if m not in models]
    if missing:
        raise ValueError(f"missing module model for {missing}")
    uses_shared = any(
        isinstance(models[m].frequency, SharedFactorFrequency)
        for m in portfolio.modules
    )
    if uses_shared and shared_factors is None:
        raise ValueError("portfolio uses shared-factor modules but no factor model given")

    pool: list[FactorPath] = []
    if shared_factors is not None and n_factor_cells is not None:
        pool_stream = seed.child_for("shared-factor-pool")
        pool = [
            shared_factors.dynamics.simulate(pool_stream.child(p).generator())
            for p in range(n_factor_cells)
        ]

    module_values = {m: np.empty(n_reps) for m in portfolio.modules}
    tags = np.empty(n_reps, dtype=int)
    for r in range(n_reps):
        rep_seed = seed.child(r)
        path: FactorPath | None = None
        if shared_factors is not None:
            if pool:
                tags[r] = r % len(pool)
                path = pool[tags[r]]
            else:
                tags[r] = r
                path = shared_factors.dynamics.simulate(
                    rep_seed.child_for("shared-factor").generator()
                )
        else:
            tags[r] = 0
        for m in portfolio.modules:
            mstream = rep_seed.child_for("module:" + m.key())
            module_values[m][r] = _replication_total(
                models[m], horizon, mstream, shared_path=path
            )

    per_module = {
        m: LossSample(
            values=module_values[m],
            horizon=horizon,
            label=f"module:{m.key()}",
            seed_trace=seed.trace(),
        )
        for m in portfolio.modules
    }
    total = LossSample(
        values=np.sum(np.array([module_values[m] for m in portfolio.modules]), axis=0),
        horizon=horizon,
        label="portfolio-total",
        seed_trace=seed.trace(),
    )
    return PortfolioSample(
        total=total, per_module=per_module, factor_tags=tags, factor_paths=tuple(pool)
    )
