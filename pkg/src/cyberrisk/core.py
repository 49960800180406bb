"""Portfolio structure, reproducible random streams, and shared event records.

A portfolio of policyholders is organized into homogeneous groups (tariff
cells) crossed with risk categories.  A (category, group) pair is the unit
at which frequency and severity models are attached; every other module in
the package consumes these types.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "ModelError",
    "RiskModule",
    "Group",
    "Portfolio",
    "SeedStream",
    "EventRecord",
    "build_portfolio",
    "derive_stream",
    "stable_child_index",
]


class ModelError(ValueError):
    """A model-contract violation (explosive spec, unsolvable constraint, ...).

    Distinct from plain ``ValueError`` so the command-line layer can map it
    to a runtime-model exit code rather than a config-validation one.
    """


@dataclass(frozen=True)
class RiskModule:
    """A (risk category, tariff group) pair, the basic modeling cell."""

    category: str
    group: str

    def key(self) -> str:
        return f"{self.category}/{self.group}"


@dataclass(frozen=True)
class Group:
    """Homogeneous tariff group: covariates and the number of firms in it."""

    id: str
    covariates: tuple[float, ...]
    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError(f"non-positive count for group {self.id!r}")
        object.__setattr__(self, "covariates", tuple(float(v) for v in self.covariates))


@dataclass(frozen=True)
class Portfolio:
    """Groups crossed with risk categories; module index set has C*K entries."""

    groups: tuple[Group, ...]
    categories: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.groups:
            raise ValueError("portfolio needs at least one group")
        if not self.categories:
            raise ValueError("portfolio needs at least one category")
        ids = [g.id for g in self.groups]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate group ids")
        if len(set(self.categories)) != len(self.categories):
            raise ValueError("duplicate categories")
        dims = {len(g.covariates) for g in self.groups}
        if len(dims) > 1:
            raise ValueError("ragged covariate vectors")

    @property
    def n_firms(self) -> int:
        return sum(g.count for g in self.groups)

    @property
    def modules(self) -> tuple[RiskModule, ...]:
        return tuple(
            RiskModule(c, g.id) for c in self.categories for g in self.groups
        )

    def group_by_id(self, group_id: str) -> Group:
        for g in self.groups:
            if g.id == group_id:
                return g
        raise KeyError(group_id)


def build_portfolio(config: Mapping) -> Portfolio:
    """Build and validate a :class:`Portfolio` from a plain config mapping.

    Expected shape::

        {"categories": ["data-breach", ...],
         "groups": [{"id": "k1", "covariates": [0.1, 2.0], "count": 10}, ...]}
    """
    try:
        categories = tuple(str(c) for c in config["categories"])
        group_cfgs = config["groups"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"portfolio config missing field: {exc}") from exc
    groups = []
    for gc in group_cfgs:
        try:
            groups.append(
                Group(
                    id=str(gc["id"]),
                    covariates=tuple(gc.get("covariates", ())),
                    count=int(gc["count"]),
                )
            )
        except KeyError as exc:
            raise ValueError(f"group config missing field: {exc}") from exc
    return Portfolio(groups=tuple(groups), categories=categories)


@dataclass(frozen=True)
class SeedStream:
    """Splittable random stream: a master seed plus a substream path.

    Identical ``(master_seed, path)`` pairs yield bit-identical generators;
    distinct paths yield statistically independent streams.  Derivation is
    pure, so parallel replications are reproducible independent of thread
    scheduling.
    """

    master_seed: int
    path: tuple[int, ...] = field(default_factory=tuple)

    def child(self, index: int) -> "SeedStream":
        if index < 0:
            raise ValueError("child index must be nonnegative")
        return SeedStream(self.master_seed, self.path + (int(index),))

    def child_for(self, key: str) -> "SeedStream":
        """Derive a child keyed by a stable string hash (order-independent)."""
        return self.child(stable_child_index(key))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.path)
        return np.random.default_rng(seq)

    def trace(self) -> str:
        return f"{self.master_seed}:" + ".".join(str(p) for p in self.path)


def derive_stream(seed: SeedStream, child: int) -> SeedStream:
    """Derive the ``child``-th substream of ``seed`` (deterministic, pure)."""
    return seed.child(child)


def stable_child_index(key: str) -> int:
    """Map a string key to a substream index, stable across runs and versions."""
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


@dataclass(frozen=True)
class EventRecord:
    """One simulated claim: arrival time, owning module, firm, and amount."""

    time: float
    module: RiskModule | None
    firm: int
    amount: float

    def __post_init__(self) -> None:
        if self.time < 0:
            raise ValueError("event time must be nonnegative")
        if self.amount < 0:
            raise ValueError("event amount must be nonnegative")
