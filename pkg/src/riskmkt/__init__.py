"""Competitive equilibria of risk markets and monotone market completion."""

from .analytic import discretize_example7, example3_analytic, example7_solve, poisson_market
from .completion import (
    dyadic_refinement,
    dyadic_scheme,
    pairing_gap,
    run_completion,
    split_scheme,
    tail_scheme,
    zero_price_refinement_check,
)
from .core import (
    Agent,
    CVaR,
    GoodDeal,
    InstrumentSet,
    MarketInstance,
    Partition,
    Polyhedral,
    ScenarioSpace,
    arrow_debreu,
    from_partition,
    tail_instruments,
)
from .equilibrium import EquilibriumResult, agent_best_response, complete_market_value, solve_equilibrium
from .estimator import RiskMarketEquilibrium
from .exceptions import RiskMarketError
from .lp import LpProblem, LpSolution, solve_lp, verify_kkt
from .riskmeasures import cvar, evaluate, gooddeal, polyhedral

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "CVaR",
    "EquilibriumResult",
    "GoodDeal",
    "InstrumentSet",
    "LpProblem",
    "LpSolution",
    "MarketInstance",
    "Partition",
    "Polyhedral",
    "RiskMarketEquilibrium",
    "RiskMarketError",
    "ScenarioSpace",
    "agent_best_response",
    "arrow_debreu",
    "complete_market_value",
    "cvar",
    "discretize_example7",
    "dyadic_refinement",
    "dyadic_scheme",
    "evaluate",
    "example3_analytic",
    "example7_solve",
    "from_partition",
    "gooddeal",
    "pairing_gap",
    "poisson_market",
    "polyhedral",
    "run_completion",
    "solve_equilibrium",
    "solve_lp",
    "split_scheme",
    "tail_instruments",
    "tail_scheme",
    "verify_kkt",
    "zero_price_refinement_check",
]
