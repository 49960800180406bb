"""Scenario configs: validation, model building, and execution.

A scenario is a JSON object with a single ``kind`` discriminator plus
kind-specific blocks.  Validation builds every referenced model object
without running simulations; execution produces deterministic CSV tables
(one observation per row, 17 significant digits) and a JSON summary.
"""

from __future__ import annotations

import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import aggregation, dependence, frequency, game, pricing, severity
from .core import ModelError, SeedStream
from .netepidemic import (
    ClosureSpec,
    Graph,
    PopulationSIR,
    SpreadParams,
    SpreadState,
    exact_master,
    generate_ba,
    generate_er,
    generate_named,
    gillespie_marginals,
    integrate_population_sir,
    portfolio_hazard,
    solve_closure,
)

__all__ = ["SCENARIO_KINDS", "ScenarioOutput", "validate_config", "execute"]

SCENARIO_KINDS = (
    "frequency-sim",
    "collective-sim",
    "epidemic-sim",
    "closure-compare",
    "population-sir",
    "game",
    "price-classical",
    "price-systematic",
    "price-systemic",
)

_COLLECTIVE_CHUNK = 2_000
_EPIDEMIC_CHUNK = 20_000


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) if not isinstance(v, str) else v for v in row))
        buf.write("\n")
    return buf.getvalue()


@dataclass
class ScenarioOutput:
    files: dict = field(default_factory=dict)  # filename -> text content
    summary: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Config builders (shared between validate and execute).
# ---------------------------------------------------------------------------


def _build_intensity(cfg) -> frequency.Intensity:
    form = cfg.get("form")
    if form == "constant":
        return frequency.ConstantIntensity(float(cfg["rate"]))
    if form == "piecewise-linear":
        return frequency.PiecewiseLinearIntensity(
            tuple(cfg["times"]), tuple(cfg["values"])
        )
    if form == "gam":
        return frequency.GamIntensity(
            float(cfg["f_value"]), tuple(cfg["g_times"]), tuple(cfg["g_values"])
        )
    raise ValueError(
        f"unknown intensity form {form!r}; expected constant | piecewise-linear | gam"
    )


def _build_link(cfg):
    kind = cfg.get("kind", "identity")
    if kind == "identity":
        return lambda x: float(np.atleast_1d(x)[0])
    if kind == "affine":
        a, b = float(cfg.get("a", 0.0)), float(cfg.get("b", 1.0))
        return lambda x: a + b * float(np.atleast_1d(x)[0])
    if kind == "exp":
        a, b = float(cfg.get("a", 0.0)), float(cfg.get("b", 1.0))
        return lambda x: float(np.exp(a + b * float(np.atleast_1d(x)[0])))
    raise ValueError(f"unknown link kind {kind!r}")


def _build_factor_model(cfg) -> frequency.FactorModel:
    dyn = cfg.get("dynamics", {})
    kind = dyn.get("kind")
    if kind == "deterministic":
        path = frequency.FactorPath(
            times=np.asarray(dyn["times"], dtype=float),
            values=np.asarray(dyn["values"], dtype=float),
        )
        dynamics = frequency.DeterministicFactor(path)
    elif kind == "ou":
        dynamics = frequency.OuFactor(
            speed=tuple(np.atleast_1d(dyn["speed"])),
            level=tuple(np.atleast_1d(dyn["level"])),
            vol=tuple(np.atleast_1d(dyn["vol"])),
            x0=tuple(np.atleast_1d(dyn["x0"])),
            grid=tuple(dyn["grid"]),
        )
    else:
        raise ValueError(f"unknown factor dynamics {kind!r}")
    return frequency.FactorModel(dynamics=dynamics, link=_build_link(cfg.get("link", {})))


def _build_severity(cfg) -> severity.Severity:
    family = cfg.get("family")
    if family == "lognormal":
        return severity.LognormalSeverity(float(cfg["mu"]), float(cfg["sigma"]))
    if family == "gamma":
        return severity.GammaSeverity(float(cfg["shape"]), float(cfg["scale"]))
    if family == "pert":
        return severity.PertSeverity(
            float(cfg["minimum"]), float(cfg["mode"]), float(cfg["maximum"])
        )
    if family == "gpd":
        return severity.GpdSeverity(
            float(cfg["xi"]), float(cfg["sigma"]), float(cfg.get("loc", 0.0))
        )
    if family == "beta":
        return severity.BetaSeverity(float(cfg["a"]), float(cfg["b"]))
    if family == "truncated-normal":
        return severity.TruncatedNormalSeverity(float(cfg["mu"]), float(cfg["sigma"]))
    if family == "empirical-kernel":
        return severity.KernelSeverity(cfg["data"])
    if family == "constant":
        return severity.FixedSeverity(float(cfg["value"]))
    if family == "composite":
        return severity.CompositeSeverity(
            body=_build_severity(cfg["body"]),
            tail=_build_severity(cfg["tail"]),
            threshold=float(cfg["threshold"]),
        )
    raise ValueError(f"unknown severity family {family!r}")


def _build_graph(cfg) -> tuple[Graph, SeedStream | None]:
    topology = cfg.get("topology")
    if topology in ("star", "complete", "path", "isolated", "tree"):
        return (
            generate_named(topology, int(cfg["n"]), cfg.get("branching")),
            None,
        )
    if topology == "er":
        return None, None  # built at execution with a seed; validated below
    if topology == "ba":
        return None, None
    if topology == "edges":
        return Graph(int(cfg["n"]), [tuple(e) for e in cfg["edges"]]), None
    raise ValueError(f"unknown graph topology {topology!r}")


def _materialize_graph(cfg, seed: SeedStream) -> Graph:
    topology = cfg.get("topology")
    if topology == "er":
        return generate_er(int(cfg["n"]), float(cfg["p"]), seed.child_for("graph"))
    if topology == "ba":
        return generate_ba(int(cfg["n"]), int(cfg["m_attach"]), seed.child_for("graph"))
    graph, _ = _build_graph(cfg)
    return graph


def _build_risk_measure(cfg):
    kind = cfg.get("kind")
    if kind == "var":
        return pricing.VaR(float(cfg["level"]))
    if kind == "avar":
        return pricing.AVaR(float(cfg["level"]))
    if kind == "entropic":
        return pricing.Entropic(float(cfg["gamma"]))
    if kind == "expectation":
        return pricing.Expectation()
    if kind == "distortion":
        power = float(cfg.get("power", 0.5))
        if not 0 < power <= 1:
            raise ValueError("distortion power must lie in (0, 1]")
        return pricing.Distortion(lambda u: u**power)
    raise ValueError(f"unknown risk measure kind {kind!r}")


def _build_utility(cfg):
    kind = cfg.get("kind", "linear")
    if kind == "linear":
        return game.LinearUtility()
    if kind == "exponential":
        return game.ExponentialUtility(float(cfg["a"]))
    if kind == "log":
        return game.LogUtility(float(cfg.get("shift", 0.0)))
    raise ValueError(f"unknown utility kind {kind!r}")


def _build_agent(cfg) -> game.AgentSpec:
    return game.AgentSpec(
        wealth=float(cfg["wealth"]),
        loss=float(cfg["loss"]),
        utility=_build_utility(cfg.get("utility", {})),
        cost=game.PowerCost(
            float(cfg.get("cost", {}).get("scale", 1.0)),
            float(cfg.get("cost", {}).get("exponent", 2.0)),
        ),
        attack=game.LinearAttack(float(cfg.get("attack", {}).get("p0", 1.0))),
    )


def _build_game_spec(cfg) -> game.GameSpec:
    agents = tuple(_build_agent(a) for a in cfg["agents"])
    premiums = cfg.get("premiums", "fair")
    return game.GameSpec(
        agents=agents, contagion=np.asarray(cfg["contagion"], dtype=float),
        premiums=premiums,
    )


def _build_frequency(cfg):
    kind = cfg.get("type")
    if kind == "poisson":
        return aggregation.PoissonFrequency(_build_intensity(cfg["intensity"]))
    if kind == "cox":
        return aggregation.CoxFrequency(_build_factor_model(cfg["factor"]))
    if kind == "hawkes":
        labels = tuple(cfg.get("labels", ("stream-0",)))
        baselines = tuple(_build_intensity(b) for b in cfg["baselines"])
        spec = frequency.HawkesSpec(
            labels=labels,
            baselines=baselines,
            alpha=np.asarray(cfg["alpha"], dtype=float),
            beta=np.asarray(cfg["beta"], dtype=float),
            counts=tuple(cfg["counts"]) if "counts" in cfg else None,
        )
        return aggregation.HawkesFrequency(spec)
    raise ValueError(f"unknown frequency type {kind!r}")


def _build_collective(cfg) -> aggregation.CollectiveModel:
    coupling = None
    if cfg.get("coupling"):
        coupling = dependence.GumbelCopula(float(cfg["coupling"]["theta"]), 2)
    return aggregation.CollectiveModel(
        frequency=_build_frequency(cfg["frequency"]),
        severity=_build_severity(cfg["severity"]),
        coupling=coupling,
    )


def _build_spread_params(cfg, model_default="SIS") -> SpreadParams:
    return SpreadParams(
        tau=float(cfg["tau"]),
        gamma=float(cfg["gamma"]),
        epsilon=cfg.get("epsilon", 0.0),
        model=cfg.get("model", model_default),
    )


def _build_loss_values(cfg, seed: SeedStream, threads: int) -> np.ndarray:
    if "values" in cfg:
        return np.asarray(cfg["values"], dtype=float)
    if "simulate" in cfg:
        sim = cfg["simulate"]
        model = _build_collective(sim)
        return _chunked_totals(
            model,
            float(sim.get("horizon", 1.0)),
            int(sim["replications"]),
            seed,
            threads,
        )
    raise ValueError("loss block needs either 'values' or 'simulate'")


# ---------------------------------------------------------------------------
# Validation.
# ---------------------------------------------------------------------------


def validate_config(cfg, structural_only: bool = False) -> list[str]:
    """Structural and semantic validation without execution.

    With ``structural_only`` set, model-contract violations (ModelError) are
    left to surface at execution time; the run command uses this so that,
    e.g., an explosive Hawkes spec is reported as a runtime model error.
    """
    diagnostics: list[str] = []
    if not isinstance(cfg, dict):
        return ["config must be a JSON object"]
    kind = cfg.get("kind")
    if kind not in SCENARIO_KINDS:
        return [
            f"unknown kind {kind!r}; allowed kinds: {', '.join(SCENARIO_KINDS)}"
        ]
    if "master_seed" in cfg and not isinstance(cfg["master_seed"], int):
        diagnostics.append("master_seed must be an integer")

    def attempt(label, fn, *args):
        try:
            fn(*args)
        except ModelError as exc:
            if not structural_only:
                diagnostics.append(f"{label}: {exc}")
        except (ValueError, KeyError, TypeError) as exc:
            diagnostics.append(f"{label}: {exc}")

    try:
        if kind == "frequency-sim":
            attempt("process", _build_frequency, cfg.get("process", {}))
            if float(cfg.get("horizon", 1.0)) <= 0:
                diagnostics.append("horizon must be positive")
        elif kind == "collective-sim":
            attempt("model", _build_collective, cfg)
            if int(cfg.get("replications", 0)) < 1:
                diagnostics.append("replications must be >= 1")
        elif kind == "epidemic-sim":
            attempt("graph", _build_graph, cfg.get("graph", {}))
            attempt("params", _build_spread_params, cfg)
            if not cfg.get("t_grid"):
                diagnostics.append("t_grid must be a nonempty increasing list")
        elif kind == "closure-compare":
            attempt("graph", _build_graph, cfg.get("graph", {}))
            attempt("params", _build_spread_params, cfg)
            if not cfg.get("t_grid"):
                diagnostics.append("t_grid must be a nonempty increasing list")
        elif kind == "population-sir":
            attempt(
                "population",
                lambda c: PopulationSIR(
                    n_pop=float(c["n_pop"]),
                    tau=float(c["tau"]),
                    gamma=float(c["gamma"]),
                    s0=float(c["s0"]),
                    i0=float(c["i0"]),
                    r0=float(c.get("r0", 0.0)),
                ),
                cfg,
            )
        elif kind == "game":
            attempt("game", _build_game_spec, cfg)
        elif kind == "price-classical":
            if "losses" not in cfg:
                diagnostics.append("price-classical needs a losses block")
            for pr in cfg.get("principles", []):
                if pr.get("principle") not in (
                    "variance",
                    "stddev",
                    "exponential",
                    "wang",
                ):
                    diagnostics.append(
                        f"unknown principle {pr.get('principle')!r}"
                    )
        elif kind == "price-systematic":
            if "position" not in cfg:
                diagnostics.append("price-systematic needs a position block")
            attempt("rho", _build_risk_measure, cfg.get("rho", {}))
            for h in cfg.get("hedges", []):
                if h.get("type") not in ("zero", "proportional", "values"):
                    diagnostics.append(f"unknown hedge type {h.get('type')!r}")
        elif kind == "price-systemic":
            attempt("rho_e", _build_risk_measure, cfg.get("acceptance", {}).get("rho_e", {}))
            attempt("rho_y", _build_risk_measure, cfg.get("acceptance", {}).get("rho_y", {}))
            grid = cfg.get("grid", {})
            if float(grid.get("step", 0)) <= 0:
                diagnostics.append("grid step must be positive")
            mode = cfg.get("loss", {}).get("mode")
            if mode not in ("fixed-binary", "values", "game"):
                diagnostics.append(f"unknown loss mode {mode!r}")
            if mode == "game":
                attempt("loss game", _build_game_spec, cfg.get("loss", {}))
    except ModelError as exc:
        if not structural_only:
            diagnostics.append(str(exc))
    except (ValueError, KeyError, TypeError) as exc:
        diagnostics.append(str(exc))
    return diagnostics


# ---------------------------------------------------------------------------
# Execution.
# ---------------------------------------------------------------------------


def _chunked_totals(model, horizon, n_reps, seed, threads) -> np.ndarray:
    """Replication totals in fixed-size chunks (thread-count independent)."""
    spans = [
        (c, min(_COLLECTIVE_CHUNK, n_reps - c * _COLLECTIVE_CHUNK))
        for c in range((n_reps + _COLLECTIVE_CHUNK - 1) // _COLLECTIVE_CHUNK)
    ]

    def run(chunk):
        c, size = chunk
        return aggregation.simulate_total(model, horizon, size, seed.child(c)).values

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, spans))
    else:
        parts = [run(s) for s in spans]
    return np.concatenate(parts)


def _run_frequency_sim(cfg, seed: SeedStream, threads: int) -> ScenarioOutput:
    freq = _build_frequency(cfg["process"])
    horizon = float(cfg.get("horizon", 1.0))
    n_reps = int(cfg.get("replications", 1))
    rows = []
    counts = []
    for r in range(n_reps):
        if isinstance(freq, aggregation.HawkesFrequency):
            paths = frequency.simulate_hawkes(freq.spec, horizon, seed.child(r))
            for t, s in zip(paths.times, paths.streams):
                rows.append([r, paths.labels[int(s)], t])
            counts.append(paths.times.size)
        else:
            times = freq.arrivals(horizon, seed.child(r))
            rows.extend([r, "stream-0", t] for t in times)
            counts.append(times.size)
    out = ScenarioOutput()
    out.files["events.csv"] = _csv(["replication", "stream", "time"], rows)
    out.summary = {
        "replications": n_reps,
        "horizon": horizon,
        "mean_count": float(np.mean(counts)),
        "total_events": int(np.sum(counts)),
    }
    return out


def _run_collective_sim(cfg, seed: SeedStream, threads: int) -> ScenarioOutput:
    model = _build_collective(cfg)
    horizon = float(cfg.get("horizon", 1.0))
    n_reps = int(cfg["replications"])
    values = _chunked_totals(model, horizon, n_reps, seed, threads)
    out = ScenarioOutput()
    out.files["losses.csv"] = _csv(
        ["replication", "value"], [[r, v] for r, v in enumerate(values)]
    )
    out.summary = {
        "replications": n_reps,
        "horizon": horizon,
        "mean": float(np.mean(values)),
        "variance": float(np.var(values, ddof=1)) if n_reps > 1 else 0.0,
        "max": float(np.max(values)),
    }
    return out


def _run_epidemic_sim(cfg, seed: SeedStream, threads: int) -> ScenarioOutput:
    graph = _materialize_graph(cfg["graph"], seed)
    params = _build_spread_params(cfg)
    init = SpreadState.from_infected(graph.n_nodes, cfg.get("initial_infected", [0]))
    t_grid = np.asarray(cfg["t_grid"], dtype=float)
    n_reps = int(cfg.get("replications", 10_000))

    spans = [
        (c, min(_EPIDEMIC_CHUNK, n_reps - c * _EPIDEMIC_CHUNK))
        for c in range((n_reps + _EPIDEMIC_CHUNK - 1) // _EPIDEMIC_CHUNK)
    ]

    def run(chunk):
        c, size = chunk
        return size, gillespie_marginals(
            graph, params, init, t_grid, size, seed.child(c)
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, spans))
    else:
        parts = [run(s) for s in spans]
    infected = sum(size * part.infected for size, part in parts) / n_reps
    se = np.sqrt(infected * (1.0 - infected) / n_reps)
    rows = []
    for k, t in enumerate(t_grid):
        for i in range(graph.n_nodes):
            rows.append([t, i, infected[k, i], se[k, i]])
    out = ScenarioOutput()
    out.files["marginals.csv"] = _csv(
        ["time", "node", "infected_probability", "standard_error"], rows
    )
    out.summary = {
        "replications": n_reps,
        "nodes": graph.n_nodes,
        "model": params.model,
        "final_mean_infection": float(np.mean(infected[-1])),
    }
    return out


def _run_closure_compare(cfg, seed: SeedStream, threads: int) -> ScenarioOutput:
    graph = _materialize_graph(cfg["graph"], seed)
    params = _build_spread_params(cfg, model_default="SIS")
    init = SpreadState.from_infected(graph.n_nodes, cfg.get("initial_infected", [0]))
    t_grid = np.asarray(cfg["t_grid"], dtype=float)
    master = exact_master(graph, params, init, t_grid)
    nimfa = solve_closure(graph, params, init, ClosureSpec("nimfa", 1), t_grid)
    hilbert = solve_closure(
        graph, params, init, ClosureSpec("split-hilbert", 1), t_grid
    )
    rows = []
    for k, t in enumerate(t_grid):
        for i in range(graph.n_nodes):
            rows.append(
                [t, i, master.infected[k, i], nimfa.infected[k, i], hilbert.infected[k, i]]
            )
    out = ScenarioOutput()
    out.files["closure.csv"] = _csv(["time", "node", "exact", "nimfa", "hilbert"], rows)
    out.summary = {
        "nodes": graph.n_nodes,
        "model": params.model,
        "nimfa_clamped_points": nimfa.clamp_count,
        "hilbert_clamped_points": hilbert.clamp_count,
        "sandwich_violation": float(
            max(
                np.max(master.infected - nimfa.infected, initial=-np.inf),
                np.max(hilbert.infected - master.infected, initial=-np.inf),
            )
        ),
    }
    return out


def _run_population_sir(cfg, seed: SeedStream, threads: int) -> ScenarioOutput:
    pop = PopulationSIR(
        n_pop=float(cfg["n_pop"]),
        tau=float(cfg["tau"]),
        gamma=float(cfg["gamma"]),
        s0=float(cfg["s0"]),
        i0=float(cfg["i0"]),
        r0=float(cfg.get("r0", 0.0)),
    )
    t_grid = np.asarray(cfg["t_grid"], dtype=float)
    traj = integrate_population_sir(pop, t_grid)
    rows = [
        [t, traj.susceptible[k], traj.infected[k], traj.recovered[k]]
        for k, t in enumerate(t_grid)
    ]
    out = ScenarioOutput()
    out.files["trajectory.csv"] = _csv(
        ["time", "susceptible", "infected", "recovered"], rows
    )
    out.summary = {
        "conservation_residual": float(
            np.max(
                np.abs(
                    traj.susceptible + traj.infected + traj.recovered - pop.n_pop
                )
            )
            / max(pop.n_pop, 1.0)
        ),
        "peak_infected": float(np.max(traj.infected)),
    }
    if "portfolio" in cfg:
        block = cfg["portfolio"]
        hazard = portfolio_hazard(traj, float(block["tau"]))
        n_firms = int(block["n_firms"])
        times = hazard.sample_infection_times(n_firms, seed.child_for("firms"))
        out.files["firms.csv"] = _csv(
            ["firm", "infection_time"],
            [[i, (t if np.isfinite(t) else np.inf)] for i, t in enumerate(times)],
        )
        out.summary["infection_probability_by_horizon"] = float(
            hazard.infection_probability(t_grid[-1])
        )
        out.summary["infected_firm_fraction"] = float(
            np.mean(np.isfinite(times))
        )
    return out


def _run_game(cfg, seed: SeedStream, threads: int) -> ScenarioOutput:
    spec = _build_game_spec(cfg)
    insured = bool(cfg.get("insured", False))
    x0 = cfg.get("x0")
    result = game.nash_iterate(
        spec, insured, x0=x0, max_rounds=int(cfg.get("max_rounds", 200))
    )
    rows = [
        [
            i,
            result.profile[i],
            result.infection_probabilities[i],
            result.expected_utilities[i],
        ]
        for i in range(spec.n_agents)
    ]
    out = ScenarioOutput()
    out.files["equilibrium.csv"] = _csv(
        ["agent", "protection", "infection_probability", "expected_utility"], rows
    )
    out.files["equilibrium.json"] = result.to_json()
    out.summary = {
        "welfare": result.welfare,
        "converged": result.converged,
        "rounds": result.rounds,
        "insured": insured,
    }
    return out


def _run_price_classical(cfg, seed: SeedStream, threads: int) -> ScenarioOutput:
    values = _build_loss_values(cfg["losses"], seed.child_for("losses"), threads)
    rows = []
    for pr in cfg["principles"]:
        principle = pr["principle"]
        if principle in ("variance", "stddev"):
            premium = pricing.classical_premium(values, principle, a=float(pr["a"]))
            parameter = float(pr["a"])
        elif principle == "exponential":
            premium = pricing.classical_premium(
                values, principle, gamma=float(pr["gamma"])
            )
            parameter = float(pr["gamma"])
        else:
            power = float(pr.get("power", 0.5))
            premium = pricing.classical_premium(
                values, "wang", psi=lambda u, p=power: u**p
            )
            parameter = power
        rows.append([principle, parameter, premium])
    out = ScenarioOutput()
    out.files["premiums.csv"] = _csv(["principle", "parameter", "premium"], rows)
    out.summary = {
        "sample_size": int(values.size),
        "mean_claims": float(np.mean(values)),
    }
    return out


def _run_price_systematic(cfg, seed: SeedStream, threads: int) -> ScenarioOutput:
    claims = _build_loss_values(cfg["position"], seed.child_for("position"), threads)
    position = -claims
    candidates = []
    for h in cfg["hedges"]:
        if h["type"] == "zero":
            candidates.append(
                pricing.HedgeCandidate("zero", np.zeros(position.size), 0.0)
            )
        elif h["type"] == "proportional":
            fraction = float(h["fraction"])
            candidates.append(
                pricing.HedgeCandidate(
                    h.get("label", f"proportional-{fraction}"),
                    -fraction * claims,
                    float(h["cost"]),
                )
            )
        else:
            candidates.append(
                pricing.HedgeCandidate(
                    h.get("label", "values"),
                    np.asarray(h["values"], dtype=float),
                    float(h["cost"]),
                )
            )
    family = pricing.HedgeFamily(candidates=tuple(candidates))
    rho = _build_risk_measure(cfg["rho"])
    result = pricing.systematic_premium(
        position,
        family,
        rho,
        rho_max=cfg.get("rho_max"),
        h_max=cfg.get("h_max"),
    )
    out = ScenarioOutput()
    out.files["systematic.csv"] = _csv(
        ["hedge", "hedge_price", "residual_risk", "premium"],
        [[result.hedge.label, result.hedge_price, result.residual_risk, result.premium]],
    )
    out.summary = {
        "premium": result.premium,
        "hedge": result.hedge.label,
        "residual_risk": result.residual_risk,
    }
    return out


def _run_price_systemic(cfg, seed: SeedStream, threads: int) -> ScenarioOutput:
    loss_cfg = cfg["loss"]
    n_customers = int(cfg["customers"])
    n_contracts = int(cfg["contracts"])
    mode = loss_cfg["mode"]
    if mode == "fixed-binary":
        model = pricing.BinaryLossModel(
            float(loss_cfg["loss"]),
            float(loss_cfg["probability"]),
            n_customers,
            int(loss_cfg["replications"]),
        )
    elif mode == "values":
        model = pricing.FixedLossModel(
            losses=np.asarray(loss_cfg["losses"], dtype=float),
            e_tilde=np.asarray(loss_cfg.get("e_tilde", 0.0), dtype=float),
        )
    else:
        model = pricing.GameLossModel(
            game=_build_game_spec(loss_cfg),
            n_reps=int(loss_cfg["replications"]),
            seed=seed.child_for("game-losses"),
            e_tilde=float(loss_cfg.get("e_tilde", 0.0)),
        )
    acceptance = pricing.AcceptanceSpec(
        rho_e=_build_risk_measure(cfg["acceptance"]["rho_e"]),
        rho_y=_build_risk_measure(cfg["acceptance"]["rho_y"]),
    )
    grid = cfg["grid"]
    result = pricing.systemic_premium_search(
        n_customers,
        n_contracts,
        model,
        acceptance,
        float(grid["min"]),
        float(grid["max"]),
        float(grid["step"]),
        criterion=cfg.get("criterion", "competition"),
        weights=cfg.get("weights"),
        symmetric=bool(cfg.get("symmetric", False)),
    )
    entry_names = [
        f"pi_{i}_{j}" for i in range(n_customers) for j in range(n_contracts)
    ]
    rows = [
        list(p.matrix.ravel()) + [int(p.accept_e), int(p.accept_y), p.rho_e_value, p.rho_y_value]
        for p in result.points
    ]
    minimal_rows = [list(m.ravel()) for m in result.minimal]
    out = ScenarioOutput()
    out.files["admissible.csv"] = _csv(
        entry_names + ["accept_e", "accept_y", "rho_e", "rho_y"], rows
    )
    out.files["minimal.csv"] = _csv(entry_names, minimal_rows)
    out.summary = {
        "admissible_count": len(result.admissible_points()),
        "minimal_count": len(result.minimal),
        "selected": [float(v) for v in result.selected.ravel()],
        "selected_value": result.selected_value,
        "criterion": result.criterion,
        "upward_closed": pricing.check_upward_closed(result),
    }
    return out


_RUNNERS = {
    "frequency-sim": _run_frequency_sim,
    "collective-sim": _run_collective_sim,
    "epidemic-sim": _run_epidemic_sim,
    "closure-compare": _run_closure_compare,
    "population-sir": _run_population_sir,
    "game": _run_game,
    "price-classical": _run_price_classical,
    "price-systematic": _run_price_systematic,
    "price-systemic": _run_price_systemic,
}


def execute(cfg, seed: SeedStream, threads: int = 1) -> ScenarioOutput:
    """Run a validated scenario; returns file contents plus a summary."""
    kind = cfg["kind"]
    return _RUNNERS[kind](cfg, seed, threads)
