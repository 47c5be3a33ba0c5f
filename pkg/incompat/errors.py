"""
Exception hierarchy for incompat.

Every failure raised on purpose by the library derives from `IncompatError`.
The base is not a `ValueError`: raised inside a pydantic validator it propagates
unchanged rather than as a `ValidationError`.
"""


class IncompatError(Exception):
    """Base class for all incompat errors."""


class NotHermitian(IncompatError):
    pass


class DimensionMismatch(IncompatError):
    pass


class InvalidObservable(IncompatError):
    """An operator violates one of the observable invariants (hermitian, traceless, norm, count)."""

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        message = f"{invariant}: {detail}" if detail else invariant
        super().__init__(message)


class InvalidState(IncompatError):
    pass


class InvalidParameter(IncompatError):
    pass


class ReservedBetaKey(IncompatError):
    pass


class InfeasibleBeta(IncompatError):
    pass


class DegenerateBasis(IncompatError):
    pass


class EmptyDataset(IncompatError):
    pass


class DegenerateDenominator(IncompatError):
    pass


class BudgetExceeded(IncompatError):
    pass


class UnknownPreset(IncompatError):
    pass


class ParseError(IncompatError):
    """A text file could not be parsed; `line` is 1-based."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")
