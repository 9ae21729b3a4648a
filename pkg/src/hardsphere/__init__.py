"""Hard instances for Gaussian-process bandits on the sphere with the squared-exponential kernel."""
__version__ = "0.1.0"

from .exceptions import (BudgetError, ConfigError, ConvergenceError, DomainError, FactorizationError,  # noqa: E402
                         HypothesisViolation, RangeError)

__all__ = ["__version__", "BudgetError", "ConfigError", "ConvergenceError", "DomainError", "FactorizationError",
           "HypothesisViolation", "RangeError"]
