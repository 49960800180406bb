"""Network epidemic machinery: graphs, spread processes, closures, losses."""

from .graphs import Graph, generate_ba, generate_er, generate_named
from .spread import (
    BatchMarginals,
    SpreadLog,
    SpreadParams,
    SpreadState,
    gillespie_marginals,
    gillespie_spread,
)
from .master import MasterSolution, exact_master
from .closures import (
    ClosureResult,
    ClosureSpec,
    ThresholdReport,
    nimfa_threshold,
    pair_closure_sir_tree_check,
    solve_closure,
)
from .nonmarkov import DeterministicWaiting, NonMarkovSpec, simulate_nonmarkov
from .population import (
    PopulationSIR,
    PortfolioHazard,
    integrate_population_sir,
    portfolio_hazard,
)
from .losses import loss_indicator, loss_recovery_cost

__all__ = [
    "Graph",
    "generate_er",
    "generate_ba",
    "generate_named",
    "SpreadParams",
    "SpreadState",
    "SpreadLog",
    "BatchMarginals",
    "gillespie_spread",
    "gillespie_marginals",
    "MasterSolution",
    "exact_master",
    "ClosureSpec",
    "ClosureResult",
    "ThresholdReport",
    "solve_closure",
    "nimfa_threshold",
    "pair_closure_sir_tree_check",
    "NonMarkovSpec",
    "DeterministicWaiting",
    "simulate_nonmarkov",
    "PopulationSIR",
    "PortfolioHazard",
    "integrate_population_sir",
    "portfolio_hazard",
    "loss_indicator",
    "loss_recovery_cost",
]
