"""Exception hierarchy shared by every lswe module.

Validation problems (bad input text, wrong shapes) derive from
``ValidationError``; failures of a numerical procedure on otherwise valid
input derive from ``NumericalError``.  The CLI maps the two families to
distinct exit codes.
"""

from __future__ import annotations


class LSWEError(Exception):
    """Base class for all library errors."""


class ValidationError(LSWEError, ValueError):
    pass


class NumericalError(LSWEError, ArithmeticError):
    pass


class ExprSyntaxError(ValidationError):
    """Malformed potential source text.

    ``offset`` is the byte offset into the UTF-8 encoded source where the
    offending token starts (the end of input for a truncated expression).
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    pass


class VariableIndexError(ExprSyntaxError):
    pass


class ExprDomainError(NumericalError):
    """An operation left its real domain (log of a non-positive value, ...)."""


class StationaryPoint(NumericalError):
    """Squared gradient norm fell below the stationary threshold."""

    def __init__(self, point, G: float, threshold: float):
        pt = ", ".join(f"{x:.6g}" for x in point)
        super().__init__(f"G={G:.3e} < {threshold:.1e} at q=({pt})")
        self.point = tuple(float(x) for x in point)
        self.G = float(G)
        self.threshold = float(threshold)


class NoConvergence(NumericalError):
    pass


class TimelikePath(NumericalError):
    pass


class DivergentPath(NumericalError):
    """A geodesic left the representable range (finite-parameter blow-up)."""


class CFLViolation(NumericalError):
    pass


class StationaryPointOnGrid(StationaryPoint):
    pass
