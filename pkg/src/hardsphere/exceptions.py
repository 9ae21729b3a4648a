"""Exception types raised across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(ValueError):
    """A requested quantity does not exist for the given parameters."""


class BudgetError(ValueError):
    """A sampling or candidate budget is too small to be meaningful."""


class ConvergenceError(ArithmeticError):
    """An iterative or quadrature computation failed to converge."""


class FactorizationError(ArithmeticError):
    """A kernel matrix could not be factorized even after jitter escalation."""


class HypothesisViolation(ValueError):
    """Parameters violate a smallness assumption required by a construction."""


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""
