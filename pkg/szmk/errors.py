class SzmkError(ValueError):
    """Base class for every error raised by the operator library."""

    def __init__(self, message: str):
        super().__init__(message)


class DomainError(SzmkError):
    """Argument outside the domain where the operator or a bound is defined."""


class NonFiniteError(SzmkError):
    """A function produced inf or nan where a finite value was required."""


class MissingDerivativeError(SzmkError):
    """A derivative (or one-sided derivative) needed by a theorem is absent."""


class UnknownFunctionError(SzmkError):
    """Name not present in the test-function registry."""


class GridError(SzmkError):
    """Degenerate grid or a supremum over an empty feasible set."""


class EnvelopeError(SzmkError):
    """Exponential-growth function evaluated outside its finite range."""
