import numpy as np
import pytest

from cyberrisk.core import SeedStream
from cyberrisk.netepidemic import (
    SpreadParams,
    SpreadState,
    exact_master,
    generate_named,
    gillespie_spread,
    loss_indicator,
    loss_recovery_cost,
)
from cyberrisk.netepidemic.spread import SpreadLog
from cyberrisk.severity import BetaSeverity, FixedSeverity, LognormalSeverity


def _static_log(n_nodes, infected, horizon=2.0):
    """A log with no events: nodes keep their initial compartments."""
    comps = np.zeros(n_nodes, dtype=np.int8)
    comps[list(infected)] = 1
    return SpreadLog(
        n_nodes=n_nodes,
        model="SIS",
        init=comps,
        times=np.array([]),
        nodes=np.array([], dtype=int),
        from_codes=np.array([], dtype=np.int8),
        to_codes=np.array([], dtype=np.int8),
        horizon=horizon,
    )


def test_loss_indicator_never_infected():
    log = _static_log(3, [])
    records = loss_indicator(log, [0.5, 1.0, 1.5], LognormalSeverity(0, 1), SeedStream(0))
    assert records == []


def test_loss_indicator_always_infected_lognormal_mean():
    log = _static_log(1, [0])
    n_attacks = 100_000
    times = np.linspace(0.0, 2.0, n_attacks)
    records = loss_indicator(log, times, LognormalSeverity(0.0, 1.0), SeedStream(1))
    amounts = np.array([r.amount for r in records])
    assert amounts.size == n_attacks
    mean = np.exp(0.5)
    sd = np.sqrt((np.e - 1) * np.e)
    assert abs(amounts.mean() - mean) < 3 * sd / np.sqrt(n_attacks)


def test_loss_indicator_attack_beyond_horizon():
    log = _static_log(2, [0], horizon=1.0)
    with pytest.raises(ValueError, match="beyond simulated horizon"):
        loss_indicator(log, [1.5], FixedSeverity(1.0), SeedStream(2))


def test_loss_indicator_expected_loss_factorizes():
    # E[loss at t] = E[L] P(infected at t), checked against the master equation.
    g = generate_named("path", 4)
    params = SpreadParams(tau=1.0, gamma=1.0, model="SIS")
    init = SpreadState.from_infected(4, [0])
    attack_time = 0.8
    master = exact_master(g, params, init, [attack_time])
    loss_mean = 2.5
    n = 20_000
    totals = np.zeros(4)
    for r in range(n):
        log = gillespie_spread(g, params, init, 1.0, SeedStream(3).child(r))
        for rec in loss_indicator(
            log, [attack_time], FixedSeverity(loss_mean), SeedStream(4).child(r)
        ):
            totals[rec.firm] += rec.amount
    expected = loss_mean * master.infected[0]
    emp = totals / n
    se = loss_mean * np.sqrt(master.infected[0] * (1 - master.infected[0]) / n)
    assert np.all(np.abs(emp - expected) < 3.5 * np.maximum(se, 1e-4))


def test_recovery_cost_zero_curves():
    g = generate_named("path", 3)
    params = SpreadParams(tau=1.0, gamma=1.0, model="SIS")
    log = gillespie_spread(
        g, params, SpreadState.from_infected(3, [0]), 3.0, SeedStream(5)
    )
    records = loss_recovery_cost(
        log, eta=lambda d: 0.0, recovery_cost=lambda t: 0.0,
        data_loss_dist=BetaSeverity(2.0, 2.0), d_max=100.0, seed=SeedStream(6),
    )
    assert all(r.amount == 0.0 for r in records)


def test_recovery_cost_exponential_episode_mean():
    # C(t) = t with Markov recoveries: mean per-episode cost is 1/gamma.
    g = generate_named("isolated", 1)
    params = SpreadParams(tau=0.0, gamma=2.0, model="SIS")
    init = SpreadState.from_infected(1, [0])
    durations = []
    for r in range(30_000):
        log = gillespie_spread(g, params, init, 50.0, SeedStream(7).child(r))
        records = loss_recovery_cost(
            log, eta=lambda d: 0.0, recovery_cost=lambda t: t,
            data_loss_dist=BetaSeverity(2.0, 2.0), d_max=1.0, seed=SeedStream(8).child(r),
        )
        durations.extend(r_.amount for r_ in records)
    durations = np.array(durations)
    assert abs(durations.mean() - 0.5) < 3 * 0.5 / np.sqrt(durations.size)


def test_recovery_cost_beta_data_loss_mean():
    # eta linear, Beta(2,2) fractions, d_max=100: mean cost is eta(50).
    log = _static_log(1, [0], horizon=1.0)  # one truncated episode
    n = 40_000
    amounts = np.empty(n)
    for r in range(n):
        records = loss_recovery_cost(
            log, eta=lambda d: 2.0 * d, recovery_cost=lambda t: 0.0,
            data_loss_dist=BetaSeverity(2.0, 2.0), d_max=100.0,
            seed=SeedStream(9).child(r),
        )
        amounts[r] = records[0].amount
    # Beta(2,2) has mean 1/2 and sd 1/sqrt(20)
    se = 2.0 * 100.0 / np.sqrt(20.0) / np.sqrt(n)
    assert abs(amounts.mean() - 100.0) < 3 * se


def test_recovery_cost_truncates_open_episodes():
    log = _static_log(1, [0], horizon=1.5)
    records = loss_recovery_cost(
        log, eta=lambda d: 0.0, recovery_cost=lambda t: t,
        data_loss_dist=BetaSeverity(2.0, 2.0), d_max=1.0, seed=SeedStream(10),
    )
    assert len(records) == 1
    assert records[0].amount == pytest.approx(1.5)


def test_recovery_cost_malformed_log_rejected():
    bad = SpreadLog(
        n_nodes=1,
        model="SIS",
        init=np.array([0], dtype=np.int8),
        times=np.array([0.5]),
        nodes=np.array([0]),
        from_codes=np.array([1], dtype=np.int8),  # claims recovery from I
        to_codes=np.array([0], dtype=np.int8),
        horizon=1.0,
    )
    with pytest.raises(ValueError, match="malformed log"):
        loss_recovery_cost(
            bad, eta=lambda d: 0.0, recovery_cost=lambda t: 0.0,
            data_loss_dist=BetaSeverity(2.0, 2.0), d_max=1.0, seed=SeedStream(11),
        )
