"""Exception types shared across the package."""


class GsekError(Exception):
    """Base class for all package errors."""


class DomainError(GsekError, ValueError):
    """An argument lies outside the domain of the operation (t <= 0, z <= 0, ...)."""


class UsageError(GsekError, ValueError):
    """Inconsistent call, e.g. points of different dimension."""


class SingularPointError(GsekError, ArithmeticError):
    """Evaluation requested exactly at a (removable or integrable) singular point.

    Quadrature code integrates around the point instead of evaluating at it.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class DivergenceError(GsekError, ArithmeticError):
    """The requested quantity is infinite for this parameter combination."""


class UnboundedPotentialError(GsekError, ValueError):
    """The operation needs a bounded potential and the node tree cannot certify one."""


class ParseError(GsekError, ValueError):
    """Potential DSL syntax error with the offending position."""

    def __init__(self, message, position, expected=None):
        self.position = position
        self.expected = expected
        text = f"{message} at position {position}"
        if expected:
            text += f" (expected {expected})"
        super().__init__(text)
