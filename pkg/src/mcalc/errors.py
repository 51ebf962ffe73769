"""Exception hierarchy shared by every mcalc module."""

from __future__ import annotations


class MCalcError(Exception):
    """Base class for all errors raised by mcalc."""


# --- expression layer -------------------------------------------------------


class ShapeMismatch(MCalcError):
    def __init__(self, path: str, expected, found):
        self.path = path
        self.expected = expected
        self.found = found
        super().__init__(f"shape mismatch at {path}: expected {expected}, found {found}")


class NonSquare(MCalcError):
    def __init__(self, path: str, shape=None):
        self.path = path
        self.shape = shape
        super().__init__(f"{path} requires a square operand, got {shape}")


class ExprSyntaxError(MCalcError):
    def __init__(self, line: int, col: int, expected: str, text: str = ""):
        self.line = line
        self.col = col
        self.expected = expected
        self.text = text
        super().__init__(f"syntax error at line {line}, col {col}: expected {expected}")


class UnknownSymbol(MCalcError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown symbol {name!r}")


class UnboundSymbol(MCalcError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"symbol {name!r} has no value in the environment")


class SingularMatrix(MCalcError):
    pass


class NonPositiveDeterminant(MCalcError):
    pass


# --- differentiation --------------------------------------------------------


class UnsupportedNode(MCalcError):
    pass


class NotReducible(MCalcError):
    pass


# --- operator calculus ------------------------------------------------------


class SignatureMismatch(MCalcError):
    pass


class ArityMismatch(MCalcError):
    pass


class UnboundFunction(MCalcError):
    pass


# --- numerics ---------------------------------------------------------------


class NonFiniteValue(MCalcError):
    pass


class NoConvergence(MCalcError):
    pass
