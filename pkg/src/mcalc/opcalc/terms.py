"""Terms of the abstract operator calculus.

A term is an integer coefficient times a composition of factors, read right
to left as in ``(D^2f o g)(Dg (x) Dg)``. Each factor is a tensor chain of
atoms; chains may nest before normalization (``I (x) (Dg (x) Dg)``).

Every atom is a linear map from a tensor product of spaces (its input
signature) to a tensor product of spaces (its output signature):

* ``Deriv(f, k, g)`` is ``D^k f o g``: k copies of dom(f) -> cod(f);
* ``Func(f, g)`` is the value ``f o g``: no inputs -> cod(f);
* ``Id(spaces)`` is the identity on ``spaces``.

Juxtaposed factors must chain: the output signature of the right factor
equals the input signature of the left one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from mcalc.errors import SignatureMismatch


@dataclass(frozen=True, order=True)
class SpaceLabel:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class FuncSymbol:
    name: str
    domain: SpaceLabel
    codomain: SpaceLabel


@dataclass(frozen=True)
class Deriv:
    func: FuncSymbol
    order: int
    composed: FuncSymbol | None = None

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("derivative order must be >= 1; use Func for order 0")
        if self.composed is not None and self.composed.codomain != self.func.domain:
            raise SignatureMismatch(f"cannot compose {self.func.name} after {self.composed.name}: "
                                    f"{self.composed.codomain} != {self.func.domain}")

    @property
    def inputs(self) -> tuple:
        return (self.func.domain,) * self.order

    @property
    def outputs(self) -> tuple:
        return (self.func.codomain,)

    @property
    def key(self) -> tuple:
        return (0, -self.order, self.func.name, self.composed.name if self.composed else "")


@dataclass(frozen=True)
class Func:
    func: FuncSymbol
    composed: FuncSymbol | None = None

    def __post_init__(self):
        if self.composed is not None and self.composed.codomain != self.func.domain:
            raise SignatureMismatch(f"cannot compose {self.func.name} after {self.composed.name}")

    order = 0
    inputs = ()

    @property
    def outputs(self) -> tuple:
        return (self.func.codomain,)

    @property
    def key(self) -> tuple:
        return (1, self.func.name, self.composed.name if self.composed else "")


@dataclass(frozen=True)
class Id:
    spaces: tuple

    def __post_init__(self):
        object.__setattr__(self, "spaces", tuple(self.spaces))

    order = 0

    @property
    def inputs(self) -> tuple:
        return self.spaces

    @property
    def outputs(self) -> tuple:
        return self.spaces

    @property
    def key(self) -> tuple:
        return (2, tuple(s.name for s in self.spaces))


Atom = Union[Deriv, Func, Id]


@dataclass(frozen=True)
class Chain:
    """``items[0] (x) items[1] (x) ...``; items are atoms or nested chains."""

    items: tuple

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))

    @property
    def inputs(self) -> tuple:
        return tuple(s for it in self.items for s in it.inputs)

    @property
    def outputs(self) -> tuple:
        return tuple(s for it in self.items for s in it.outputs)

    @property
    def key(self) -> tuple:
        return (3, tuple(it.key for it in self.items))

    @property
    def atom_key(self) -> tuple:
        """Key of the chain as a factor: the items' keys, no nesting tag."""
        return tuple(it.key for it in self.items)

    def atoms(self):
        for it in self.items:
            if isinstance(it, Chain):
                yield from it.atoms()
            else:
                yield it

    @property
    def is_identity(self) -> bool:
        return all(isinstance(a, Id) for a in self.atoms())


def chain(*items) -> Chain:
    return Chain(tuple(items))


@dataclass(frozen=True)
class OpTerm:
    coeff: int
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(
            f if isinstance(f, Chain) else Chain((f,)) for f in self.factors))
        check_signature(self)

    @property
    def inputs(self) -> tuple:
        return self.factors[-1].inputs if self.factors else ()

    @property
    def outputs(self) -> tuple:
        return self.factors[0].outputs if self.factors else ()

    @property
    def outer_order(self) -> int:
        first = next(self.factors[0].atoms(), None) if self.factors else None
        return first.order if first is not None else 0

    @property
    def key(self) -> tuple:
        return (-self.outer_order, tuple(f.atom_key for f in self.factors))


def check_signature(t: OpTerm) -> None:
    for i in range(len(t.factors) - 1):
        left, right = t.factors[i], t.factors[i + 1]
        if left.inputs != right.outputs:
            raise SignatureMismatch(
                f"factor {i} expects {tuple(map(str, left.inputs))} "
                f"but factor {i + 1} produces {tuple(map(str, right.outputs))}")


@dataclass(frozen=True)
class OpSum:
    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def __add__(self, other: "OpSum") -> "OpSum":
        return OpSum(self.terms + other.terms)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)


def term(coeff: int, *factors) -> OpTerm:
    return OpTerm(coeff, tuple(factors))
