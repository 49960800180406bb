import numpy as np
import pytest
from scipy import stats

from cyberrisk.core import SeedStream
from cyberrisk.dependence import GumbelCopula
from cyberrisk.netepidemic import (
    DeterministicWaiting,
    NonMarkovSpec,
    SpreadParams,
    SpreadState,
    generate_named,
    gillespie_spread,
    simulate_nonmarkov,
)


def test_epsilon_sis_reduction_chi_square():
    # Exponential, independent waiting times reduce to the Markov model.
    g = generate_named("path", 5)
    tau, gamma, eps = 1.0, 1.0, 0.3
    init = SpreadState.from_infected(5, [2])
    spec = NonMarkovSpec(
        recovery=stats.expon(scale=1 / gamma),
        internal=stats.expon(scale=1 / tau),
        external=stats.expon(scale=1 / eps),
    )
    params = SpreadParams(tau=tau, gamma=gamma, epsilon=eps, model="SIS")
    n = 4_000
    counts = np.zeros((2, 2))
    for r in range(n):
        log_nm = simulate_nonmarkov(g, spec, init, 1.5, SeedStream(0).child(r))
        counts[0, 0] += np.sum(log_nm.to_codes == 1)
        counts[0, 1] += np.sum(log_nm.to_codes == 0)
        log_mk = gillespie_spread(g, params, init, 1.5, SeedStream(1).child(r))
        counts[1, 0] += np.sum(log_mk.to_codes == 1)
        counts[1, 1] += np.sum(log_mk.to_codes == 0)
    _, pvalue, _, _ = stats.chi2_contingency(counts)
    assert pvalue > 0.01


def test_no_infected_only_external_infections():
    g = generate_named("path", 4)
    spec = NonMarkovSpec(
        recovery=stats.expon(scale=10.0),
        internal=stats.expon(scale=1.0),
        external=stats.expon(scale=0.5),
    )
    init = SpreadState.from_infected(4, [])
    log = simulate_nonmarkov(g, spec, init, 0.3, SeedStream(2))
    first_events = log.to_codes[:1]
    assert log.times.size == 0 or log.to_codes[0] == 1  # first event is an infection


def test_no_external_no_infected_absorbs():
    g = generate_named("path", 4)
    spec = NonMarkovSpec(
        recovery=stats.expon(scale=1.0),
        internal=stats.expon(scale=1.0),
        external=None,
    )
    init = SpreadState.from_infected(4, [])
    log = simulate_nonmarkov(g, spec, init, 5.0, SeedStream(3))
    assert log.times.size == 0


def test_deterministic_recovery_episode_length():
    # Single node: no interleaving events, so clocks are never regenerated
    # mid-episode and every completed episode lasts exactly d.
    g = generate_named("isolated", 1)
    d = 0.7
    spec = NonMarkovSpec(
        recovery=DeterministicWaiting(d),
        internal=stats.expon(scale=1.0),
        external=stats.expon(scale=0.25),
    )
    init = SpreadState.from_infected(1, [0])
    log = simulate_nonmarkov(g, spec, init, 20.0, SeedStream(4))
    episodes = [e for e in log.episodes(0) if not e[2]]
    assert len(episodes) >= 2
    for start, end, _ in episodes:
        assert end - start == pytest.approx(d, abs=1e-12)


def test_copula_coupled_internal_times_run():
    g = generate_named("star", 5)
    spec = NonMarkovSpec(
        recovery=stats.expon(scale=1.0),
        internal=stats.expon(scale=0.5),
        external=None,
        copula_family=lambda dim: GumbelCopula(2.0, dim),
    )
    init = SpreadState.from_infected(5, [0])
    log = simulate_nonmarkov(g, spec, init, 3.0, SeedStream(5))
    assert np.all(np.diff(log.times) > 0)


def test_comonotone_internal_dependence_slows_center_infection():
    # With strongly dependent transmission clocks, the minimum of k waits
    # behaves like a single wait, so the hub gets infected later than under
    # independence.
    g = generate_named("star", 6)
    init = SpreadState.from_infected(6, [1, 2, 3, 4, 5])
    horizon = 1.2

    def first_center_infection(copula_family, master):
        hits = 0
        n = 2_500
        for r in range(n):
            spec = NonMarkovSpec(
                recovery=stats.expon(scale=1e9),  # effectively no recovery
                internal=stats.expon(scale=1.0),
                external=None,
                copula_family=copula_family,
            )
            log = simulate_nonmarkov(g, spec, init, horizon, SeedStream(master).child(r))
            hits += int(np.any(log.nodes == 0))
        return hits / n

    p_indep = first_center_infection(None, 6)
    p_dep = first_center_infection(lambda dim: GumbelCopula(8.0, dim), 7)
    assert p_indep > p_dep + 0.05


def test_per_node_distribution_lists():
    g = generate_named("path", 3)
    spec = NonMarkovSpec(
        recovery=[stats.expon(scale=1.0)] * 3,
        internal=[stats.expon(scale=1.0)] * 3,
        external=[stats.expon(scale=2.0)] * 3,
    )
    log = simulate_nonmarkov(
        g, spec, SpreadState.from_infected(3, [0]), 1.0, SeedStream(8)
    )
    assert log.n_nodes == 3
    with pytest.raises(ValueError, match="per node"):
        NonMarkovSpec(
            recovery=[stats.expon()] * 2,
            internal=stats.expon(),
        )
        simulate_nonmarkov(
            g,
            NonMarkovSpec(recovery=[stats.expon()] * 2, internal=stats.expon()),
            SpreadState.from_infected(3, [0]),
            1.0,
            SeedStream(9),
        )
