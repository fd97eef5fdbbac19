"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all toolkit-specific errors."""


class PoleError(ToolkitError, ValueError):
    """Evaluation requested at (or too close to) a pole.

    Carries the offending point in ``location``.
    """

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class OverflowRangeError(ToolkitError, OverflowError):
    """Result magnitude exceeds the representable double range."""


class PreconditionError(ToolkitError, ValueError):
    """An operation was called outside its documented domain."""


class BudgetExceededError(ToolkitError, RuntimeError):
    """A subdivision/cell budget was exhausted before convergence."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class CoefficientRangeError(ToolkitError, ValueError):
    """A sum needs Hecke eigenvalues beyond the stored range."""


class FormFileError(ToolkitError, ValueError):
    """Malformed coefficient file; ``line`` is the 1-based offending line."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class HeckeViolationError(ToolkitError, ValueError):
    """Stored eigenvalues fail a Hecke relation beyond tolerance."""

    def __init__(self, message, n=None, violation=None):
        super().__init__(message)
        self.n = n
        self.violation = violation


class CalibrationError(ToolkitError, RuntimeError):
    """Calibration probes disagree beyond the consistency threshold."""


class TruncationWarning(UserWarning):
    """A truncated tail estimate exceeds the requested accuracy budget."""
