"""Immutable AST for matrix- and scalar-valued expressions.

Matrices and scalars are separate sorts: ``MatExpr`` nodes carry a
:class:`Shape`, ``ScalarExpr`` nodes report the :data:`SCALAR` marker.
Shapes are checked when a node is constructed, so an ill-shaped tree
cannot exist.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from mcalc.errors import NonSquare, ShapeMismatch


@dataclass(frozen=True, order=True)
class Shape:
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"shape dimensions must be positive, got {self.rows}x{self.cols}")

    @property
    def square(self) -> bool:
        return self.rows == self.cols

    @property
    def T(self) -> "Shape":
        return Shape(self.cols, self.rows)

    def __str__(self):
        return f"{self.rows}x{self.cols}"


class _ScalarMarker:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "SCALAR"


SCALAR = _ScalarMarker()


def direction_name(index: int) -> str:
    """Reserved symbol for direction ``index``: Z, T, Z3, Z4, ..."""
    if index < 1:
        raise ValueError("direction indices start at 1")
    return {1: "Z", 2: "T"}.get(index, f"Z{index}")


def direction_index(name: str) -> int | None:
    if name == "Z":
        return 1
    if name == "T":
        return 2
    if name.startswith("Z") and name[1:].isdigit() and int(name[1:]) >= 3:
        return int(name[1:])
    return None


def _set(obj, **kw):
    for k, v in kw.items():
        object.__setattr__(obj, k, v)


class Node:
    """Common base; both sorts share traversal helpers."""

    __slots__ = ()

    @property
    def tag(self) -> str:
        return type(self).__name__

    def children(self) -> tuple["Node", ...]:
        return ()

    def walk(self):
        yield self
        for c in self.children():
            yield from c.walk()


class MatExpr(Node):
    __slots__ = ()
    shape: Shape


class ScalarExpr(Node):
    __slots__ = ()

    @property
    def shape(self):
        return SCALAR


Expr = Union[MatExpr, ScalarExpr]


def _require_mat(node_tag: str, child, i: int | None = None) -> None:
    if not isinstance(child, MatExpr):
        where = node_tag if i is None else f"{node_tag}[{i}]"
        raise ShapeMismatch(where, "matrix", "scalar" if isinstance(child, ScalarExpr) else type(child).__name__)


def _require_scalar(node_tag: str, child, i: int | None = None) -> None:
    if not isinstance(child, ScalarExpr):
        where = node_tag if i is None else f"{node_tag}[{i}]"
        found = child.shape if isinstance(child, MatExpr) else type(child).__name__
        raise ShapeMismatch(where, "scalar", found)


# --- matrix leaves -----------------------------------------------------------


@dataclass(frozen=True)
class Const(MatExpr):
    name: str
    shape: Shape


@dataclass(frozen=True)
class Var(MatExpr):
    name: str
    shape: Shape


@dataclass(frozen=True)
class Dir(MatExpr):
    """Direction symbol. ``index`` 1 is Z, 2 is T, k >= 3 is Zk."""

    name: str
    shape: Shape
    index: int

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("direction index must be >= 1")


@dataclass(frozen=True)
class Identity(MatExpr):
    n: int
    shape: Shape = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise NonSquare("Identity", self.n)
        _set(self, shape=Shape(self.n, self.n))


@dataclass(frozen=True)
class Zero(MatExpr):
    shape: Shape


# --- matrix interior nodes ---------------------------------------------------


@dataclass(frozen=True)
class Add(MatExpr):
    terms: tuple[MatExpr, ...]
    shape: Shape = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        _set(self, terms=terms)
        if not terms:
            raise ValueError("Add needs at least one term")
        for i, t in enumerate(terms):
            _require_mat("Add", t, i)
        s = terms[0].shape
        for i, t in enumerate(terms[1:], 1):
            if t.shape != s:
                raise ShapeMismatch(f"Add[{i}]", s, t.shape)
        _set(self, shape=s)

    def children(self):
        return self.terms


@dataclass(frozen=True)
class Neg(MatExpr):
    arg: MatExpr
    shape: Shape = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _require_mat("Neg", self.arg)
        _set(self, shape=self.arg.shape)

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class ScalarMul(MatExpr):
    coeff: ScalarExpr
    arg: MatExpr
    shape: Shape = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _require_scalar("ScalarMul", self.coeff, 0)
        _require_mat("ScalarMul", self.arg, 1)
        _set(self, shape=self.arg.shape)

    def children(self):
        return (self.coeff, self.arg)


@dataclass(frozen=True)
class MatMul(MatExpr):
    left: MatExpr
    right: MatExpr
    shape: Shape = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _require_mat("MatMul", self.left, 0)
        _require_mat("MatMul", self.right, 1)
        a, b = self.left.shape, self.right.shape
        if a.cols != b.rows:
            raise ShapeMismatch("MatMul", f"{b.rows} rows on the right (inner dimension {a.cols})", b)
        _set(self, shape=Shape(a.rows, b.cols))

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Transpose(MatExpr):
    arg: MatExpr
    shape: Shape = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _require_mat("Transpose", self.arg)
        _set(self, shape=self.arg.shape.T)

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Inverse(MatExpr):
    arg: MatExpr
    shape: Shape = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _require_mat("Inverse", self.arg)
        if not self.arg.shape.square:
            raise NonSquare("Inverse", self.arg.shape)
        _set(self, shape=self.arg.shape)

    def children(self):
        return (self.arg,)


# --- scalar nodes ------------------------------------------------------------


@dataclass(frozen=True)
class Lit(ScalarExpr):
    value: Fraction

    def __post_init__(self):
        v = self.value
        if isinstance(v, float):
            raise TypeError("symbolic literals must be exact rationals")
        _set(self, value=Fraction(v))


@dataclass(frozen=True)
class Trace(ScalarExpr):
    arg: MatExpr

    def __post_init__(self):
        _require_mat("Trace", self.arg)
        if not self.arg.shape.square:
            raise NonSquare("Trace", self.arg.shape)

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class LogDet(ScalarExpr):
    arg: MatExpr

    def __post_init__(self):
        _require_mat("LogDet", self.arg)
        if not self.arg.shape.square:
            raise NonSquare("LogDet", self.arg.shape)

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class SAdd(ScalarExpr):
    terms: tuple[ScalarExpr, ...]

    def __post_init__(self):
        _set(self, terms=tuple(self.terms))
        if not self.terms:
            raise ValueError("SAdd needs at least one term")
        for i, t in enumerate(self.terms):
            _require_scalar("SAdd", t, i)

    def children(self):
        return self.terms


@dataclass(frozen=True)
class SMul(ScalarExpr):
    factors: tuple[ScalarExpr, ...]

    def __post_init__(self):
        _set(self, factors=tuple(self.factors))
        if not self.factors:
            raise ValueError("SMul needs at least one factor")
        for i, t in enumerate(self.factors):
            _require_scalar("SMul", t, i)

    def children(self):
        return self.factors


@dataclass(frozen=True)
class SNeg(ScalarExpr):
    arg: ScalarExpr

    def __post_init__(self):
        _require_scalar("SNeg", self.arg)

    def children(self):
        return (self.arg,)


MAT_LEAVES = (Const, Var, Dir, Identity, Zero)


def infer_shape(e: Expr, path: str = ""):
    """Return the shape of ``e`` (or :data:`SCALAR`), re-validating every node.

    Construction already rejects ill-shaped trees; this walk exists so callers
    holding foreign objects get a located error instead of an AttributeError.
    """
    here = f"{path}/{e.tag}" if path else e.tag
    if isinstance(e, MAT_LEAVES):
        return e.shape
    if isinstance(e, Lit):
        return SCALAR
    kids = [infer_shape(c, f"{here}[{i}]") for i, c in enumerate(e.children())]
    if isinstance(e, (Trace, LogDet, Inverse)):
        (s,) = kids
        if s is SCALAR:
            raise ShapeMismatch(here, "matrix", "scalar")
        if not s.square:
            raise NonSquare(here, s)
        return SCALAR if isinstance(e, ScalarExpr) else s
    if isinstance(e, MatMul):
        a, b = kids
        if a is SCALAR or b is SCALAR or a.cols != b.rows:
            raise ShapeMismatch(here, a, b)
        return Shape(a.rows, b.cols)
    if isinstance(e, Transpose):
        return kids[0].T
    if isinstance(e, (Neg, SNeg)):
        return kids[0]
    if isinstance(e, ScalarMul):
        if kids[0] is not SCALAR:
            raise ShapeMismatch(here, "scalar", kids[0])
        return kids[1]
    if isinstance(e, (Add, SAdd, SMul)):
        first = kids[0]
        for s in kids[1:]:
            if s != first:
                raise ShapeMismatch(here, first, s)
        return first
    raise TypeError(f"not an expression node: {e!r}")


def free_symbols(e: Expr) -> dict[str, MatExpr]:
    """Map of symbol name to leaf node (Const, Var or Dir) occurring in ``e``."""
    out: dict[str, MatExpr] = {}
    for n in e.walk():
        if isinstance(n, (Const, Var, Dir)):
            out.setdefault(n.name, n)
    return out


def directions(e: Expr) -> set[int]:
    return {n.index for n in e.walk() if isinstance(n, Dir)}
