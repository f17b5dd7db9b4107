"""Exception taxonomy shared across the package."""


class MonoresError(Exception):
    """Base class for all package-specific errors."""


class ParseError(MonoresError):
    """Raised on malformed series text; carries the offending position."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class DimensionError(MonoresError):
    """Raised when objects of incompatible variable counts are combined."""


class InputZeroError(MonoresError):
    """Raised when the zero series is handed to an operation that needs a nonzero one."""


class BudgetError(MonoresError):
    """Raised when a configured budget (terms, nodes, charts, depth) is exceeded."""


class NoWitnessError(MonoresError):
    """Raised when no bounded-below derivative direction exists within the order cap."""


class VerificationError(MonoresError):
    """Raised when an exactness or sampling check that must hold fails."""
