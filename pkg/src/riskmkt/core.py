"""Domain types: scenario spaces, partitions, instruments, agents and markets.

Scenario indices are 0-based everywhere in the library; only the CLI speaks
1-based indices. All types are frozen and hold read-only arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import (
    DimensionMismatch,
    EmptyIntersection,
    InvalidParameter,
    OverlappingBundles,
    UncoveredScenario,
    UnsupportedRiskMeasure,
)
from .validation import check_beta, check_loss_vector, check_probability_vector


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ScenarioSpace:
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen(check_probability_vector(self.probs)))

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    @classmethod
    def uniform(cls, n: int) -> "ScenarioSpace":
        if n < 1:
            raise InvalidParameter("need at least one scenario")
        return cls(np.full(n, 1.0 / n))

    def expect(self, z) -> float:
        return float(self.probs @ np.asarray(z, dtype=float))


def make_scenario_space(probs) -> ScenarioSpace:
    return ScenarioSpace(probs)


@dataclass(frozen=True)
class Partition:
    """Disjoint cover of ``range(n)`` by nonempty bundles.

    Bundles are stored as sorted tuples, ordered by their smallest element.
    """

    n: int
    bundles: tuple

    def __post_init__(self):
        bundles = []
        for b in self.bundles:
            b = tuple(sorted(int(s) for s in b))
            if not b:
                raise UncoveredScenario("empty bundle")
            if len(set(b)) != len(b):
                raise OverlappingBundles(f"bundle {b} repeats a scenario")
            bundles.append(b)
        seen = np.zeros(self.n, dtype=int)
        for b in bundles:
            if b[0] < 0 or b[-1] >= self.n:
                raise UncoveredScenario(f"bundle {b} has indices outside 0..{self.n - 1}")
            seen[list(b)] += 1
        if np.any(seen > 1):
            raise OverlappingBundles(f"scenario {int(np.argmax(seen > 1))} lies in more than one bundle")
        if np.any(seen == 0):
            raise UncoveredScenario(f"scenario {int(np.argmax(seen == 0))} is in no bundle")
        bundles.sort(key=lambda b: b[0])
        object.__setattr__(self, "bundles", tuple(bundles))

    def __len__(self):
        return len(self.bundles)

    def bundle_of(self, s: int) -> int:
        for j, b in enumerate(self.bundles):
            if s in b:
                return j
        raise UncoveredScenario(f"scenario {s} not covered")

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(n, tuple((s,) for s in range(n)))


@dataclass(frozen=True)
class InstrumentSet:
    """Payoff matrix with one row per scenario and one column per instrument.

    ``partition`` is kept when the set was built from bundles, for labelling.
    """

    payoff: np.ndarray
    partition: Partition | None = None

    def __post_init__(self):
        A = _frozen(self.payoff)
        if A.ndim != 2:
            raise DimensionMismatch(f"payoff must be 2-d, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise DimensionMismatch("payoff has non-finite entries")
        zero = np.flatnonzero(~np.any(A != 0, axis=0))
        if zero.size:
            raise DimensionMismatch(f"instrument {int(zero[0])} pays nothing in every scenario")
        object.__setattr__(self, "payoff", A)

    @property
    def n(self) -> int:
        return self.payoff.shape[0]

    @property
    def k(self) -> int:
        return self.payoff.shape[1]

    def support_range(self, j: int) -> tuple[int, int]:
        """First and last scenario (0-based) where instrument ``j`` pays."""
        nz = np.flatnonzero(self.payoff[:, j])
        return int(nz[0]), int(nz[-1])

    def spans(self, other: "InstrumentSet", tol: float = 1e-9) -> bool:
        """True if every column of ``other`` is a combination of our columns."""
        if other.n != self.n:
            return False
        coef, *_ = np.linalg.lstsq(self.payoff, other.payoff, rcond=None)
        resid = self.payoff @ coef - other.payoff
        return bool(np.abs(resid).max(initial=0.0) <= tol)


def from_partition(space: ScenarioSpace | int, partition: Partition) -> InstrumentSet:
    n = space if isinstance(space, int) else space.n
    if partition.n != n:
        raise DimensionMismatch(f"partition covers {partition.n} scenarios, space has {n}")
    A = np.zeros((n, len(partition)))
    for j, b in enumerate(partition.bundles):
        A[list(b), j] = 1.0
    return InstrumentSet(A, partition)


def arrow_debreu(n: int) -> InstrumentSet:
    """The complete market: one security per scenario."""
    return from_partition(n, Partition.singletons(n))


def tail_instruments(n: int, k: int) -> InstrumentSet:
    """Column ``j`` pays 1 in every scenario ``s >= j``; column 0 is riskless."""
    if not 1 <= k <= n:
        raise InvalidParameter(f"instrument count {k} out of range 1..{n}")
    A = np.tril(np.ones((n, n)))[:, :k]
    return InstrumentSet(A)


# -- risk measures ---------------------------------------------------------


@dataclass(frozen=True)
class CVaR:
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "beta", check_beta(self.beta))

    def density_caps(self, space: ScenarioSpace) -> np.ndarray:
        return np.full(space.n, 1.0 / self.beta)


@dataclass(frozen=True)
class GoodDeal:
    nu: float

    def __post_init__(self):
        if not float(self.nu) > 1.0:
            raise InvalidParameter(f"nu must exceed 1, got {self.nu!r}")
        object.__setattr__(self, "nu", float(self.nu))

    def density_caps(self, space):
        raise UnsupportedRiskMeasure("Good-Deal risk sets are not polyhedral")


@dataclass(frozen=True)
class Polyhedral:
    """Risk set ``{0 <= Y <= upper, E[Y] = 1}`` with per-scenario caps."""

    upper: np.ndarray

    def __post_init__(self):
        u = _frozen(self.upper).reshape(-1)
        if np.any(u < 0) or not np.all(np.isfinite(u)):
            raise InvalidParameter("density caps must be finite and nonnegative")
        object.__setattr__(self, "upper", u)

    def density_caps(self, space: ScenarioSpace) -> np.ndarray:
        if self.upper.shape[0] != space.n:
            raise DimensionMismatch(f"caps have length {self.upper.shape[0]}, space has {space.n}")
        if self.upper @ space.probs < 1.0 - 1e-12:
            raise EmptyIntersection("density caps admit no unit-mean density")
        return self.upper


RiskMeasure = CVaR | GoodDeal | Polyhedral


@dataclass(frozen=True)
class Agent:
    loss: np.ndarray
    risk: RiskMeasure

    def __post_init__(self):
        object.__setattr__(self, "loss", _frozen(check_loss_vector(self.loss)))
        if not isinstance(self.risk, (CVaR, GoodDeal, Polyhedral)):
            raise UnsupportedRiskMeasure(f"unknown risk measure {self.risk!r}")


@dataclass(frozen=True)
class MarketInstance:
    space: ScenarioSpace
    agents: tuple

    def __post_init__(self):
        agents = tuple(self.agents)
        if len(agents) < 2:
            raise InvalidParameter("a market needs at least two agents")
        for i, a in enumerate(agents):
            if a.loss.shape[0] != self.space.n:
                raise DimensionMismatch(f"agent {i} loss has length {a.loss.shape[0]}, space has {self.space.n}")
            if isinstance(a.risk, Polyhedral):
                a.risk.density_caps(self.space)
        object.__setattr__(self, "agents", agents)

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def losses(self) -> np.ndarray:
        """Agents x scenarios loss matrix."""
        return np.vstack([a.loss for a in self.agents])

    @classmethod
    def cvar_market(cls, probs, losses: Sequence, betas: Sequence[float]) -> "MarketInstance":
        space = probs if isinstance(probs, ScenarioSpace) else ScenarioSpace(probs)
        if len(losses) != len(betas):
            raise DimensionMismatch("need one beta per loss vector")
        return cls(space, tuple(Agent(z, CVaR(b)) for z, b in zip(losses, betas)))
