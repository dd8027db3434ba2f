"""Closed-form benchmark markets.

* Poisson market: two CVaR agents with losses ``1`` and ``s`` over Poisson(1)
  scenarios, trading the first three tail instruments. Known exact prices.
* Uniform market: two CVaR agents on ``[0, 1]`` with losses ``2w`` and
  ``1 - w`` trading the bundles ``[0, 1/2)`` and ``[1/2, 1]``. Closed-form
  prices as a function of the two CVaR levels, plus a midpoint discretization
  that turns it into a finite market for the LP machinery.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import InstrumentSet, MarketInstance, Partition, ScenarioSpace, tail_instruments
from .completion import dyadic_refinement
from .exceptions import InvalidParameter, OutOfAnalyzedDomain
from .validation import check_beta


class Regime(enum.Enum):
    ZERO_LOWER_BUNDLE = "zero-lower-bundle"
    INTERIOR = "interior"


@dataclass(frozen=True)
class Example7Solution:
    regime: Regime
    u_star: float
    price_low: float  # E[Y | [0, 1/2)]
    price_high: float  # E[Y | [1/2, 1]]

    @property
    def prices(self) -> np.ndarray:
        return np.array([self.price_low, self.price_high])


def example7_solve(beta1: float, beta2: float) -> Example7Solution:
    """Equilibrium bundle prices of the two-agent uniform market.

    Prices are conditional densities (they average to 1), not the per-unit
    bundle prices the LP reports; multiply by 1/2 to compare.
    """
    beta1, beta2 = check_beta(beta1), check_beta(beta2)
    if max(beta1, beta2) > 0.5:
        raise OutOfAnalyzedDomain(f"closed form only covers max(beta) <= 1/2, got {max(beta1, beta2)}")
    s = 2.0 * beta1 + beta2
    if s <= 0.5:
        return Example7Solution(Regime.ZERO_LOWER_BUNDLE, 0.0, 0.0, 2.0)
    half_spread = 1.0 / (2.0 * s)
    return Example7Solution(Regime.INTERIOR, 0.5 - 1.0 / (4.0 * s), 1.0 - half_spread, 1.0 + half_spread)


def example7_points(n: int) -> np.ndarray:
    return (np.arange(1, n + 1) - 0.5) / n


def discretize_example7(n: int, beta1: float, beta2: float, m: int = 1) -> tuple[MarketInstance, Partition]:
    """Midpoint discretization with ``n`` equiprobable atoms and dyadic level ``m``."""
    partition = dyadic_refinement(n, m)
    w = example7_points(n)
    market = MarketInstance.cvar_market(ScenarioSpace.uniform(n), [2.0 * w, 1.0 - w], [beta1, beta2])
    return market, partition


def bundle_densities(prices, instruments: InstrumentSet, space: ScenarioSpace) -> np.ndarray:
    """Per-unit prices divided by each instrument's expected payoff."""
    return np.asarray(prices, dtype=float) / (space.probs @ instruments.payoff)


# -- Poisson market ------------------------------------------------------------

POISSON_BETAS = (1.0 - math.exp(-1.0), 1.0 - 2.0 * math.exp(-1.0))


def truncate_poisson(mu: float, N: int) -> tuple[ScenarioSpace, np.ndarray]:
    """Poisson(mu) on ``0..N-1`` with the tail mass folded into the last atom.

    Returns the space and a 2 x N loss matrix: a constant loss of 1 and a
    loss equal to the scenario index.
    """
    if N < 3:
        raise InvalidParameter(f"need at least 3 scenarios, got {N}")
    if mu <= 0:
        raise InvalidParameter(f"mu must be positive, got {mu}")
    logp = -mu + np.arange(N) * math.log(mu) - np.array([math.lgamma(s + 1) for s in range(N)])
    p = np.exp(logp)
    p[-1] += max(0.0, 1.0 - math.fsum(p))
    losses = np.vstack([np.ones(N), np.arange(N, dtype=float)])
    return ScenarioSpace(p / math.fsum(p)), losses


def poisson_market(N: int = 30, mu: float = 1.0, betas=POISSON_BETAS) -> tuple[MarketInstance, InstrumentSet]:
    space, losses = truncate_poisson(mu, N)
    return MarketInstance.cvar_market(space, list(losses), list(betas)), tail_instruments(N, 3)


def example3_densities(terms: int = 80) -> tuple[np.ndarray, np.ndarray]:
    """The two agents' pricing masses on scenarios ``0..terms-1``."""
    e = math.exp(-1.0)
    b1, b2 = POISSON_BETAS
    p = np.array([math.exp(-1.0 - math.lgamma(s + 1)) for s in range(terms)])
    pi1 = p / b1
    pi1[0] = 0.0
    pi2 = p / b2
    pi2[0] = 0.0
    pi2[1] = e / b1
    pi2[2] = e / (b2 * 2.0) - e / b1
    return pi1, pi2


def example3_analytic(terms: int = 80) -> tuple[np.ndarray, float]:
    """Exact prices and optimal welfare of the Poisson market.

    Welfare is summed as a series; terms decay like ``1/s!`` so 80 terms are
    far past double precision.
    """
    e = math.exp(-1.0)
    prices = np.array([1.0, 1.0, 1.0 - e / (1.0 - e)])
    pi1, pi2 = example3_densities(terms)
    s = np.arange(terms, dtype=float)
    welfare = math.fsum(pi1) + math.fsum(s * pi2)
    return prices, welfare
