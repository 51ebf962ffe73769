"""Symbol declarations (``NAME:RxC:role``) and numeric environments."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from mcalc.errors import MCalcError, ShapeMismatch, UnboundSymbol
from mcalc.expr.ast import Const, Dir, MatExpr, Shape, Var, direction_index

ROLES = ("const", "var", "dir")

_DECL_RE = re.compile(r"^\s*([A-Za-z][A-Za-z0-9_]*)\s*:\s*(\d+)\s*[xX]\s*(\d+)\s*:\s*(const|var|dir)\s*$")

RESERVED = frozenset({"tr", "logdet", "inv", "I"})


class DeclarationError(MCalcError):
    pass


@dataclass(frozen=True)
class Decl:
    name: str
    shape: Shape
    role: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise DeclarationError(f"unknown role {self.role!r} for {self.name}")
        if self.name in RESERVED:
            raise DeclarationError(f"{self.name!r} is a reserved word")
        if self.role == "dir" and direction_index(self.name) is None:
            raise DeclarationError(f"direction symbols must be named Z, T, Z3, Z4, ...; got {self.name!r}")

    def node(self) -> MatExpr:
        if self.role == "const":
            return Const(self.name, self.shape)
        if self.role == "var":
            return Var(self.name, self.shape)
        return Dir(self.name, self.shape, direction_index(self.name))

    def __str__(self):
        return f"{self.name}:{self.shape}:{self.role}"


def parse_decl(text: str) -> Decl:
    m = _DECL_RE.match(text)
    if not m:
        raise DeclarationError(f"bad declaration {text!r}; expected NAME:ROWSxCOLS:{{const|var|dir}}")
    name, r, c, role = m.groups()
    return Decl(name, Shape(int(r), int(c)), role)


def symbol_table(decls: Iterable[Decl | str]) -> dict[str, Decl]:
    """Build a name -> Decl table, rejecting conflicting redefinitions."""
    table: dict[str, Decl] = {}
    for d in decls:
        if isinstance(d, str):
            d = parse_decl(d)
        old = table.get(d.name)
        if old is not None and old != d:
            raise DeclarationError(f"{d.name} redeclared as {d} (was {old})")
        table[d.name] = d
    return table


def with_directions(table: Mapping[str, Decl], var: str, count: int) -> dict[str, Decl]:
    """Add direction symbols 1..count shaped like ``var``."""
    from mcalc.expr.ast import direction_name

    out = dict(table)
    shape = table[var].shape
    for k in range(1, count + 1):
        name = direction_name(k)
        out.setdefault(name, Decl(name, shape, "dir"))
    return out


@dataclass(frozen=True)
class Env:
    """Symbol name -> float64 matrix binding, plus the seed that produced it."""

    values: Mapping[str, np.ndarray] = field(default_factory=dict)
    seed: int | None = None

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.values[name]
        except KeyError:
            raise UnboundSymbol(name) from None

    def __contains__(self, name: str) -> bool:
        return name in self.values

    def bind(self, **values) -> "Env":
        new = dict(self.values)
        new.update({k: np.asarray(v, dtype=float) for k, v in values.items()})
        return Env(new, self.seed)

    def check(self, table: Mapping[str, Decl]) -> None:
        for name, d in table.items():
            if name in self.values:
                got = np.shape(self.values[name])
                if got != (d.shape.rows, d.shape.cols):
                    raise ShapeMismatch(f"env[{name}]", d.shape, got)


def well_conditioned(rng: np.random.Generator, n: int) -> np.ndarray:
    """Nonsymmetric n x n matrix with spectrum clustered around 1 (det > 0 in practice)."""
    return np.eye(n) + 0.3 * rng.standard_normal((n, n)) / np.sqrt(n)


def spd(rng: np.random.Generator, n: int) -> np.ndarray:
    b = rng.standard_normal((n, n))
    return b @ b.T / n + np.eye(n)


def random_env(table: Mapping[str, Decl], seed: int | np.random.Generator | None = None, *,
               square: str = "well_conditioned", unit_directions: bool = False) -> Env:
    """Draw a value for every declared symbol.

    Rectangular symbols and directions are standard normal. Other square
    symbols use :func:`well_conditioned` or :func:`spd` so inverses and
    log-determinants are defined. With ``unit_directions`` every direction
    is scaled to unit Frobenius norm.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    gen = {"well_conditioned": well_conditioned, "spd": spd}[square]
    vals = {}
    for name in sorted(table):
        d = table[name]
        r, c = d.shape.rows, d.shape.cols
        if r == c and d.role != "dir":
            vals[name] = gen(rng, r)
        else:
            vals[name] = rng.standard_normal((r, c))
            if unit_directions and d.role == "dir":
                vals[name] /= np.linalg.norm(vals[name])
    return Env(vals, seed if isinstance(seed, int) else None)
