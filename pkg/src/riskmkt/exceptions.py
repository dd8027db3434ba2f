"""Exception hierarchy for riskmkt.

Every error raised on bad input derives from :class:`RiskMarketError`, which is a
``ValueError`` so callers that only care about "bad argument" can catch that.
"""


class RiskMarketError(ValueError):
    """Base class for all riskmkt errors."""


# core
class NegativeProbability(RiskMarketError):
    pass


class SumNotOne(RiskMarketError):
    pass


class OverlappingBundles(RiskMarketError):
    pass


class UncoveredScenario(RiskMarketError):
    pass


class InvalidSplit(RiskMarketError):
    pass


class NonDivisible(RiskMarketError):
    pass


class DimensionMismatch(RiskMarketError):
    pass


# lp
class NumericalFailure(RiskMarketError):
    pass


# equilibrium
class UnsupportedRiskMeasure(RiskMarketError):
    pass


class EmptyIntersection(RiskMarketError):
    """The agents' risk sets have no common density."""


class UnboundedResponse(RiskMarketError):
    """Prices admit arbitrage against the agent's risk set."""


class SolverFailure(RiskMarketError):
    """An LP that should be solvable came back infeasible or unbounded."""


# completion
class BundleNotZeroPriced(RiskMarketError):
    pass


class NotZeroSum(RiskMarketError):
    pass


class RefinementNotNested(RiskMarketError):
    pass


class MonotonicityViolation(RiskMarketError):
    pass


# analytic
class OutOfAnalyzedDomain(RiskMarketError):
    pass


# cli
class ConfigError(RiskMarketError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvalidParameter(RiskMarketError):
    """A scalar parameter (beta, nu, k, ...) is outside its domain."""
