"""
Exception hierarchy for the BRL Market Engine

Every error raised on purpose by the engine derives from MarketError, and
also from the builtin it refines, so callers catching ValueError or
RuntimeError keep working.
"""


class MarketError(Exception):
    """Base class for engine errors"""


class DomainError(MarketError, ValueError):
    """Numeric input outside the domain (non-positive price, rho outside (0,1), ...)"""


class ArgumentError(MarketError, ValueError):
    """Invalid call arguments (level 0, empty active set, depth cap, ...)"""


class PriceBoxError(DomainError):
    """Initial prices outside the invariant box [p_min, p_max]^n"""


class SolverError(MarketError, RuntimeError):
    """An iterative solver hit its iteration cap"""


class OracleError(SolverError):
    """The tatonnement cross-check failed to converge"""


class InsufficientDataError(MarketError, ValueError):
    """Too few points above the noise floor to fit a decay rate"""


class PropertyViolation(MarketError, AssertionError):
    """A certified property (clearing residual, oracle agreement) failed"""
