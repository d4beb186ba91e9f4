"""Exception types shared across the package."""


class ModescError(Exception):
    """Base class for all package-specific errors."""


class ContractViolation(ModescError):
    """An argument breaks a documented precondition (wrong manifold, base
    mismatch, non-finite input, constraint drift beyond repair)."""


class OutOfRangeError(ModescError):
    """A geometric operation was requested outside its validity range,
    e.g. a log map past the injectivity radius or transport between
    antipodal points."""


class EvaluationError(ModescError):
    """An objective component produced a non-finite value."""

    def __init__(self, message, component=None):
        super().__init__(message)
        self.component = component


class UnsupportedProblem(ModescError):
    """The requested computation is outside the supported size range."""


class LineSearchError(ModescError):
    """Backtracking exhausted its ladder; almost always a sign of an
    inconsistent gradient or a non-descent direction."""


class StepRuleViolation(ModescError):
    """A user-supplied step size broke its contract (range or sufficient
    decrease)."""


class ConfigError(ModescError):
    """An experiment configuration failed schema validation."""
