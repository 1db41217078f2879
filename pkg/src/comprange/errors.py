"""Exception types shared across the package."""


class CompRangeError(Exception):
    """Base class for package errors."""


class DomainError(CompRangeError, ValueError):
    """Point outside the admissible region of the unit disk."""


class ValidationError(CompRangeError, ValueError):
    """Invalid descriptor, configuration field, or parameter range."""


class SelfMapError(ValidationError):
    """A constructed map escapes the unit disk."""


class ConfigError(CompRangeError, ValueError):
    """Scenario configuration could not be parsed."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ContourError(CompRangeError, RuntimeError):
    """A winding-number contour passes through a zero and nudging failed."""


class ConvergenceError(CompRangeError, RuntimeError):
    """Root subdivision or Newton polishing failed to converge."""


class EvaluationError(CompRangeError, ArithmeticError):
    """Symbol evaluation failed (singularity guard or overflow)."""
