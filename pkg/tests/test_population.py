import numpy as np
import pytest

from cyberrisk.core import SeedStream
from cyberrisk.netepidemic import (
    PopulationSIR,
    PortfolioHazard,
    integrate_population_sir,
    portfolio_hazard,
)


def test_conservation_on_epidemic_parameters():
    pop = PopulationSIR(n_pop=1e6, tau=3e-6, gamma=0.35, s0=1e6 - 50, i0=50.0)
    grid = np.linspace(0.0, 30.0, 301)
    traj = integrate_population_sir(pop, grid)
    residual = np.max(
        np.abs(traj.susceptible + traj.infected + traj.recovered - pop.n_pop)
    ) / pop.n_pop
    assert residual < 1e-9
    assert min(traj.susceptible.min(), traj.infected.min(), traj.recovered.min()) >= -1e-12


def test_tau_zero_exponential_decay():
    pop = PopulationSIR(n_pop=100.0, tau=0.0, gamma=0.7, s0=90.0, i0=10.0)
    grid = np.linspace(0.0, 5.0, 51)
    traj = integrate_population_sir(pop, grid)
    expected = 10.0 * np.exp(-0.7 * grid)
    rel = np.abs(traj.infected - expected) / np.maximum(expected, 1e-300)
    assert rel.max() < 1e-8


def test_disease_free_constant():
    pop = PopulationSIR(n_pop=100.0, tau=0.01, gamma=0.5, s0=100.0, i0=0.0)
    traj = integrate_population_sir(pop, np.linspace(0.0, 10.0, 11))
    assert np.max(np.abs(traj.susceptible - 100.0)) < 1e-9
    assert np.max(np.abs(traj.infected)) < 1e-12


def test_invalid_initial_conditions():
    with pytest.raises(ValueError):
        PopulationSIR(n_pop=10.0, tau=0.1, gamma=1.0, s0=5.0, i0=1.0)
    with pytest.raises(ValueError):
        PopulationSIR(n_pop=10.0, tau=0.1, gamma=1.0, s0=-1.0, i0=11.0)


def test_hazard_zero_infected_never_infects():
    ph = PortfolioHazard(
        t_grid=np.linspace(0, 2, 21), infected=np.zeros(21), tau=0.8
    )
    times = ph.sample_infection_times(1000, SeedStream(0))
    assert np.all(np.isinf(times))
    assert ph.infection_probability(2.0) == 0.0


def test_hazard_constant_infected_closed_form():
    c, tau, horizon = 3.0, 0.5, 1.0
    ph = PortfolioHazard(
        t_grid=np.array([0.0, horizon]), infected=np.array([c, c]), tau=tau
    )
    expected = 1.0 - np.exp(-tau * c * horizon)
    assert ph.infection_probability(horizon) == pytest.approx(expected, rel=1e-12)
    n = 100_000
    times = ph.sample_infection_times(n, SeedStream(1))
    emp = np.mean(np.isfinite(times))
    assert abs(emp - expected) < 3 * np.sqrt(expected * (1 - expected) / n)


def test_hazard_doubling_tau_monotone_under_common_randoms():
    grid = np.linspace(0.0, 1.0, 11)
    infected = np.linspace(1.0, 4.0, 11)
    low = PortfolioHazard(t_grid=grid, infected=infected, tau=0.3)
    high = PortfolioHazard(t_grid=grid, infected=infected, tau=0.6)
    t_low = low.sample_infection_times(5000, SeedStream(2))
    t_high = high.sample_infection_times(5000, SeedStream(2))
    assert np.all(np.isfinite(t_low) <= np.isfinite(t_high))
    # infected-by-horizon indicator is monotone in tau path-by-path
    assert np.all(~(np.isfinite(t_low) & ~np.isfinite(t_high)))


def test_hazard_from_trajectory():
    pop = PopulationSIR(n_pop=1000.0, tau=0.002, gamma=0.5, s0=995.0, i0=5.0)
    grid = np.linspace(0.0, 10.0, 101)
    traj = integrate_population_sir(pop, grid)
    ph = portfolio_hazard(traj, tau=0.001)
    assert ph.hazard(0.0) == pytest.approx(0.001 * 5.0)
    probs = ph.infection_probability(grid)
    assert np.all(np.diff(probs) >= -1e-12)
