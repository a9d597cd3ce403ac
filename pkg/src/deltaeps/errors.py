"""Exception hierarchy shared by all modules."""


class DeltaEpsError(Exception):
    """Base class for library errors."""


class ValidationError(DeltaEpsError):
    """Input violates a documented precondition."""


class ParseError(ValidationError):
    """Text could not be parsed; carries the offending position."""

    def __init__(self, message, text="", pos=0):
        self.text = text
        self.pos = pos
        if text:
            message = f"{message} at position {pos}: {text!r}"
        super().__init__(message)


class UndefinedMeasureError(DeltaEpsError):
    """A measure (min delay, degree, max term) was requested for the zero polynomial."""


class ParametricEvaluationError(DeltaEpsError):
    """Numeric evaluation was attempted on a coefficient that still holds parameters."""


class RuleConflictError(DeltaEpsError):
    """Two rules bind the same parameter to different values."""


class NoSolutionError(DeltaEpsError):
    """A Diophantine or causality problem has no solution; `witness` explains why."""

    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)


class InternalInvariantError(DeltaEpsError):
    """An algorithm invariant was broken; indicates a bug rather than bad input."""
