"""Loss models attached to a simulated spread path.

Two constructions: attack-time losses that only materialize at nodes
infected when the attack lands, and per-episode recovery costs combining a
legal cost of damaged data with a cost of the recovery duration.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..core import EventRecord, SeedStream
from .spread import SpreadLog

__all__ = ["loss_indicator", "loss_recovery_cost"]


def loss_indicator(
    log: SpreadLog,
    attack_times: Sequence[float],
    loss_dist,
    seed: SeedStream,
) -> list[EventRecord]:
    """Losses at attack times, materializing only at then-infected nodes.

    ``loss_dist`` is any severity-like object with ``sample(n, seed)``.
    Returns one record per (attack, infected node); never-infected nodes
    contribute nothing.
    """
    attack_times = np.asarray(attack_times, dtype=float)
    if np.any(attack_times > log.horizon):
        raise ValueError("attack time beyond simulated horizon")
    if np.any(attack_times < 0):
        raise ValueError("attack times must be nonnegative")
    records: list[EventRecord] = []
    for j, t_j in enumerate(attack_times):
        infected = np.nonzero(log.infected_at(float(t_j)))[0]
        if infected.size == 0:
            continue
        amounts = loss_dist.sample(infected.size, seed.child(j))
        for node, amount in zip(infected, amounts):
            records.append(
                EventRecord(
                    time=float(t_j), module=None, firm=int(node), amount=float(amount)
                )
            )
    return records


def loss_recovery_cost(
    log: SpreadLog,
    eta: Callable[[float], float],
    recovery_cost: Callable[[float], float],
    data_loss_dist,
    d_max: float,
    seed: SeedStream,
) -> list[EventRecord]:
    """Per-episode costs eta(data damaged) + C(recovery duration).

    Episodes still open at the horizon are truncated there.  The damaged
    data volume is ``d_max`` times a draw from ``data_loss_dist`` (a
    fraction distribution on [0, 1]).
    """
    if d_max < 0:
        raise ValueError("d_max must be nonnegative")
    _validate_log(log)
    records: list[EventRecord] = []
    counter = 0
    for node in range(log.n_nodes):
        for start, end, _truncated in log.episodes(node):
            fraction = float(data_loss_dist.sample(1, seed.child(counter))[0])
            counter += 1
            amount = float(eta(fraction * d_max)) + float(recovery_cost(end - start))
            if amount < 0:
                raise ValueError("cost curves produced a negative loss")
            records.append(
                EventRecord(time=float(start), module=None, firm=node, amount=amount)
            )
    return records


def _validate_log(log: SpreadLog) -> None:
    """Reject logs where a node recovers without being infected first."""
    state = log.init.copy()
    for k in range(log.times.size):
        node = log.nodes[k]
        if log.from_codes[k] != state[node]:
            raise ValueError("malformed log: transition from a mismatched state")
        state[node] = log.to_codes[k]
