"""Exception and warning types shared by every rugocell module."""

from __future__ import annotations


class RugocellError(Exception):
    """Base class for all rugocell errors."""


class NonPositiveGap(RugocellError):
    """The wall profile touches or crosses zero somewhere on the cell."""


class TooFewSamples(RugocellError):
    """A tabulated wall profile needs at least 8 samples."""


class BadResolution(RugocellError):
    """Grid interval counts must be even and at least 4."""


class ShapeMismatch(RugocellError):
    """A grid field does not match the mesh it is integrated on."""


class SingularSystem(RugocellError):
    """Factorization breakdown or iteration stagnation in a linear solve."""


class NonFinite(RugocellError):
    """A NaN or Inf appeared in a matrix, right-hand side, or solution."""


class SolverFailure(RugocellError):
    """A cell solve could not be completed."""


class DegenerateLambda(RugocellError):
    """The cell aspect parameter must be positive and finite."""


class QuadratureFailure(RugocellError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class OutOfDomain(RugocellError):
    """A point lies outside the cell 0 <= z2 <= h(z1)."""


class UnsupportedRegime(RugocellError):
    """Requested a regime the tool does not solve."""


class ParseError(RugocellError):
    """Config text could not be parsed; carries line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}" + (f", column {column}" if column is not None else "") + f": {message}"
        super().__init__(message)


class ValidationError(RugocellError):
    """One or more config/parameter violations, all collected."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class IoError(RugocellError):
    """An output file could not be written."""


class AdvectionDominatedWarning(UserWarning):
    """Cell Peclet number exceeded 2 somewhere; upwinding was engaged."""


class NonPositiveA0Warning(UserWarning):
    """The vanishing-period Poiseuille coefficient came out non-positive."""


class SupercriticalLimitWarning(UserWarning):
    """Infinite aspect limit requested: flow/rotation vanish, nothing solved."""
