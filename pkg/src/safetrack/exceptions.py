"""Exception types shared across the package."""


class SafetrackError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SafetrackError, ValueError):
    """Raised for non-finite or malformed numeric input."""


class DomainError(SafetrackError, ValueError):
    """Raised when an argument lies outside the function's domain."""


class SingularityError(SafetrackError, ArithmeticError):
    """Raised when the input matrix of the velocity dynamics is singular."""


class InCollisionError(SafetrackError, ValueError):
    """Raised when the ego vehicle is inside an obstacle disk (cone undefined)."""


class ScenarioError(SafetrackError, ValueError):
    """Raised for scenario files or values that fail validation."""
