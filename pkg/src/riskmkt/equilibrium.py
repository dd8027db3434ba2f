"""Competitive equilibrium of a risk market via social optimization.

The market clears at the solution of::

    min  sum_i r_i(z_i - A t_i)   s.t.  sum_i t_i = 0

where ``A`` is the instrument payoff matrix. For CVaR and polyhedral agents
this is an LP. Two formulations are available:

``primal``
    variables ``eta_i``, ``u_is >= 0`` and trades ``t_ij``; one epigraph row
    per (agent, scenario) and one market-clearing row per instrument. Prices
    are the clearing-row multipliers, densities the epigraph-row multipliers.

``dual``
    variables are the pricing densities ``pi_is`` in ``[0, p_s * cap_is]``;
    rows fix each agent's total mass to 1 and force every agent to agree on
    the price of every instrument. Trades come back as multipliers. The LP has
    ``I + (I-1) k`` rows instead of ``I n + k``, so it is the default.

Prices ``lambda_j`` are per unit of instrument ``j`` bought: an agent buying
``t`` pays ``lambda @ t`` now and receives ``A @ t`` in the realized scenario.
Densities are returned as probability masses (each row sums to 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Agent, GoodDeal, InstrumentSet, MarketInstance, ScenarioSpace
from .exceptions import DimensionMismatch, EmptyIntersection, SolverFailure, UnboundedResponse, UnsupportedRiskMeasure
from .lp import LpProblem, LpSolution, Status, solve_lp
from .riskmeasures import _fill, evaluate, gooddeal


@dataclass(frozen=True)
class EquilibriumResult:
    welfare: float
    trades: np.ndarray  # agents x instruments
    payoffs: np.ndarray  # agents x scenarios, A @ t_i
    prices: np.ndarray  # per instrument
    densities: np.ndarray  # agents x scenarios, probability masses
    gap: float  # sum_i r_i(z_i - w_i) minus the dual objective
    eta: np.ndarray
    lp_iterations: int = 0
    method: str = "dual"


def _mass_caps(market: MarketInstance) -> np.ndarray:
    """Agents x scenarios caps on pricing mass, ``p_s * upper_is``."""
    rows = []
    for i, a in enumerate(market.agents):
        if isinstance(a.risk, GoodDeal):
            raise UnsupportedRiskMeasure(f"agent {i} uses a Good-Deal measure, which is not LP-representable")
        rows.append(market.space.probs * a.risk.density_caps(market.space))
    return np.vstack(rows)


def _check_instruments(market, instruments):
    if instruments.n != market.n:
        raise DimensionMismatch(f"instruments cover {instruments.n} scenarios, market has {market.n}")


def build_social_lp(market: MarketInstance, instruments: InstrumentSet) -> LpProblem:
    """Primal social LP.

    Variable layout: for each agent ``[eta_i, u_i0 .. u_i(n-1)]``, then the
    trade block ``t`` in agent-major order. Rows: ``I*n`` epigraph rows written
    as ``-eta_i - u_is - (A t_i)_s <= -z_is``, then ``k`` clearing rows.
    """
    _check_instruments(market, instruments)
    caps = _mass_caps(market)
    I, n, k = len(market.agents), market.n, instruments.k
    A = instruments.payoff
    nv = I * (1 + n) + I * k
    c = np.zeros(nv)
    lb = np.full(nv, -np.inf)
    ub = np.full(nv, np.inf)
    A_le = np.zeros((I * n, nv))
    b_le = np.zeros(I * n)
    A_eq = np.zeros((k, nv))
    t0 = I * (1 + n)
    for i, a in enumerate(market.agents):
        e = i * (1 + n)
        c[e] = 1.0
        c[e + 1: e + 1 + n] = caps[i]
        lb[e + 1: e + 1 + n] = 0.0
        rows = slice(i * n, (i + 1) * n)
        A_le[rows, e] = -1.0
        A_le[rows, e + 1: e + 1 + n] = -np.eye(n)
        A_le[rows, t0 + i * k: t0 + (i + 1) * k] = -A
        b_le[rows] = -a.loss
        A_eq[np.arange(k), t0 + i * k + np.arange(k)] = 1.0
    return LpProblem(c, A_eq=A_eq, b_eq=np.zeros(k), A_le=A_le, b_le=b_le, lb=lb, ub=ub)


def build_social_dual_lp(market: MarketInstance, instruments: InstrumentSet) -> LpProblem:
    """Density LP: ``min -sum z_is pi_is`` over boxed ``pi``.

    Rows: ``sum_s pi_is = 1`` for each agent, then for agents ``i >= 1`` and
    each instrument ``j``: ``a_j @ (pi_i - pi_0) = 0``.
    """
    _check_instruments(market, instruments)
    caps = _mass_caps(market)
    I, n, k = len(market.agents), market.n, instruments.k
    A = instruments.payoff
    losses = market.losses
    A_eq = np.zeros((I + (I - 1) * k, I * n))
    for i in range(I):
        A_eq[i, i * n: (i + 1) * n] = 1.0
    for i in range(1, I):
        rows = slice(I + (i - 1) * k, I + i * k)
        A_eq[rows, i * n: (i + 1) * n] = A.T
        A_eq[rows, 0:n] = -A.T
    b_eq = np.zeros(A_eq.shape[0])
    b_eq[:I] = 1.0
    return LpProblem(-losses.reshape(-1), A_eq=A_eq, b_eq=b_eq, lb=np.zeros(I * n), ub=caps.reshape(-1))


def _certify(market, payoffs, densities):
    primal = sum(evaluate(a.risk, a.loss - w, market.space) for a, w in zip(market.agents, payoffs))
    dual = float(np.sum(market.losses * densities))
    return primal - dual


def _require_optimal(sol: LpSolution):
    if sol.status is not Status.OPTIMAL:
        raise SolverFailure(f"social LP returned {sol.status.value}")


def solve_equilibrium(market: MarketInstance, instruments: InstrumentSet, *, method: str = "dual", dump_path=None) -> EquilibriumResult:
    I, n, k = len(market.agents), market.n, instruments.k
    A = instruments.payoff
    if method == "dual":
        lp = build_social_dual_lp(market, instruments)
        sol = solve_lp(lp, dump_path=dump_path)
        _require_optimal(sol)
        pi = sol.x.reshape(I, n)
        eta = -sol.y_eq[:I]
        trades = np.zeros((I, k))
        if I > 1:
            trades[1:] = -sol.y_eq[I:].reshape(I - 1, k)
            trades[0] = -trades[1:].sum(axis=0)
        welfare = -sol.objective
    elif method == "primal":
        lp = build_social_lp(market, instruments)
        sol = solve_lp(lp, dump_path=dump_path)
        _require_optimal(sol)
        blocks = sol.x[: I * (1 + n)].reshape(I, 1 + n)
        eta = blocks[:, 0].copy()
        trades = sol.x[I * (1 + n):].reshape(I, k)
        pi = -sol.y_le.reshape(I, n)
        welfare = sol.objective
    else:
        raise ValueError(f"unknown method {method!r}")
    # clip solver noise: masses are nonnegative by construction
    pi = np.maximum(pi, 0.0)
    prices = A.T @ pi.mean(axis=0)
    payoffs = trades @ A.T
    return EquilibriumResult(
        welfare=float(welfare),
        trades=trades,
        payoffs=payoffs,
        prices=prices,
        densities=pi,
        gap=float(_certify(market, payoffs, pi)),
        eta=eta,
        lp_iterations=sol.iterations,
        method=method,
    )


def complete_market_value(market: MarketInstance) -> float:
    """Optimal welfare when every scenario is tradable.

    Only the total loss matters; it is priced by the densities common to all
    agents' risk sets.
    """
    total = market.losses.sum(axis=0)
    space = market.space
    risks = [a.risk for a in market.agents]
    if all(isinstance(r, GoodDeal) for r in risks):
        return gooddeal(total, space, min(r.nu for r in risks))
    if any(isinstance(r, GoodDeal) for r in risks):
        raise UnsupportedRiskMeasure("mixed Good-Deal and polyhedral risk sets")
    upper = np.min([r.density_caps(space) for r in risks], axis=0)
    if space.probs @ upper < 1.0 - 1e-12:
        raise EmptyIntersection("the agents' risk sets share no density")
    if total.max() == total.min():
        return float(total[0])
    y = _fill(total, space.probs, upper)
    return float(space.probs @ (total * y))


@dataclass(frozen=True)
class BestResponse:
    trade: np.ndarray
    value: float
    eta: float


def agent_best_response(agent: Agent, instruments: InstrumentSet, prices, space: ScenarioSpace) -> BestResponse:
    """Solve ``min_t prices @ t + r(z - A t)`` for one price-taking agent."""
    prices = np.asarray(prices, dtype=float).reshape(-1)
    if prices.shape[0] != instruments.k:
        raise DimensionMismatch(f"{prices.shape[0]} prices for {instruments.k} instruments")
    if instruments.n != space.n:
        raise DimensionMismatch("instrument and scenario counts differ")
    if isinstance(agent.risk, GoodDeal):
        raise UnsupportedRiskMeasure("Good-Deal best responses are not LP-representable")
    n, k = space.n, instruments.k
    caps = space.probs * agent.risk.density_caps(space)
    nv = 1 + n + k
    c = np.concatenate([[1.0], caps, prices])
    lb = np.concatenate([[-np.inf], np.zeros(n), np.full(k, -np.inf)])
    A_le = np.hstack([-np.ones((n, 1)), -np.eye(n), -instruments.payoff])
    sol = solve_lp(LpProblem(c, A_le=A_le, b_le=-agent.loss, lb=lb, ub=np.full(nv, np.inf)))
    if sol.status is Status.UNBOUNDED:
        raise UnboundedResponse("prices admit arbitrage against the agent's risk set")
    _require_optimal(sol)
    return BestResponse(trade=sol.x[1 + n:].copy(), value=sol.objective, eta=float(sol.x[0]))


def agent_value(agent: Agent, instruments: InstrumentSet, prices, trade, space: ScenarioSpace) -> float:
    """Objective of the agent's problem at a given trade."""
    trade = np.asarray(trade, dtype=float)
    return float(np.asarray(prices) @ trade + evaluate(agent.risk, agent.loss - instruments.payoff @ trade, space))
