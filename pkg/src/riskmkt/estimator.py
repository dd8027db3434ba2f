"""scikit-learn style front end.

Losses are passed as an ``(n_scenarios, n_agents)`` matrix: scenarios are
samples, agents are features, and scenario probabilities travel as
``sample_weight``. Fitting clears the market; ``transform`` returns each
agent's post-trade loss.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import CVaR, InstrumentSet, MarketInstance, Agent, ScenarioSpace, arrow_debreu, from_partition
from .completion import dyadic_refinement
from .equilibrium import complete_market_value, solve_equilibrium
from .exceptions import DimensionMismatch, InvalidParameter
from .riskmeasures import evaluate
from .validation import check_loss_matrix, check_probability_vector


def _probs_from_weights(sample_weight, n):
    if sample_weight is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(sample_weight, dtype=float).reshape(-1)
    if w.shape[0] != n:
        raise DimensionMismatch(f"sample_weight has length {w.shape[0]}, expected {n}")
    if np.any(w < 0) or w.sum() <= 0:
        raise InvalidParameter("sample_weight must be nonnegative with positive sum")
    return check_probability_vector(w / w.sum())


def _resolve_instruments(spec, n):
    if spec is None or (isinstance(spec, str) and spec == "complete"):
        return arrow_debreu(n)
    if isinstance(spec, str) and spec == "riskless":
        return InstrumentSet(np.ones((n, 1)))
    if isinstance(spec, InstrumentSet):
        return spec
    if isinstance(spec, (int, np.integer)):
        return from_partition(n, dyadic_refinement(n, int(spec)))
    return InstrumentSet(np.asarray(spec, dtype=float))


class RiskMarketEquilibrium(TransformerMixin, BaseEstimator):
    """Competitive equilibrium of CVaR agents trading a fixed instrument set.

    Parameters
    ----------
    betas : sequence of float
        CVaR level of each agent, one per column of ``X``.
    instruments : {"complete", "riskless"}, int, array-like or InstrumentSet
        What the agents may trade. An int ``m`` means ``2**m`` contiguous
        bundles; an array is a payoff matrix with one row per scenario.
    method : {"dual", "primal"}
        Which LP formulation to solve.
    """

    def __init__(self, betas=(0.2, 0.25), instruments="complete", method="dual"):
        self.betas = betas
        self.instruments = instruments
        self.method = method

    def fit(self, X, y=None, sample_weight=None):
        X = check_loss_matrix(X)
        n, n_agents = X.shape
        betas = list(self.betas)
        if len(betas) != n_agents:
            raise DimensionMismatch(f"{len(betas)} betas for {n_agents} agents")
        space = ScenarioSpace(_probs_from_weights(sample_weight, n))
        self.market_ = MarketInstance(space, tuple(Agent(X[:, i], CVaR(b)) for i, b in enumerate(betas)))
        self.instruments_ = _resolve_instruments(self.instruments, n)
        self.result_ = solve_equilibrium(self.market_, self.instruments_, method=self.method)
        self.welfare_ = self.result_.welfare
        self.prices_ = self.result_.prices
        self.trades_ = self.result_.trades
        self.densities_ = self.result_.densities
        self.complete_value_ = complete_market_value(self.market_)
        self.n_features_in_ = n_agents
        return self

    def transform(self, X):
        check_is_fitted(self, "result_")
        X = check_loss_matrix(X, self.market_.n)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatch(f"X has {X.shape[1]} agents, fitted with {self.n_features_in_}")
        return X - self.result_.payoffs.T

    def score(self, X, y=None):
        """Negative total risk of the post-trade losses (higher is better)."""
        post = self.transform(X)
        space = self.market_.space
        return -sum(evaluate(a.risk, post[:, i], space) for i, a in enumerate(self.market_.agents))
