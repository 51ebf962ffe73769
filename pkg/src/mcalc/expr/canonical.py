"""Canonical normal form for expressions.

An expression is expanded into an exact polynomial-like normal form:

* a matrix is a sum of terms ``coeff * s1*...*sm * (a1 a2 ... an)`` where the
  ``s`` are scalar atoms and the ``a`` are matrix atoms (a symbol, its
  transpose, or the inverse of a normal form, possibly transposed);
* a scalar is a sum of monomials ``coeff * s1*...*sm``;
* a scalar atom is a trace of an atom product or a log-determinant.

Transposes are pushed down to the leaves, identities absorbed, adjacent
``inv(P) P`` pairs cancelled, and every trace argument is rotated to the
least of its cyclic rotations in either orientation (``tr M = tr M'``).
Two expressions with the same normal form are equal for every binding.

:func:`simplify` expands to the normal form and rebuilds a tree from it,
factoring common left/right factors and merging traces that share a
leading atom so results read like ``tr(Z'*(A + A')*X)``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from typing import Union

from mcalc.errors import NotReducible
from mcalc.expr.ast import (
    Add, Const, Dir, Expr, Identity, Inverse, Lit, LogDet, MatExpr, MatMul,
    Neg, SAdd, ScalarExpr, ScalarMul, Shape, SMul, SNeg, Trace, Transpose, Var,
    Zero,
)

_DIR, _CONST, _VAR, _INV = 0, 1, 2, 3
_KIND = {Dir: _DIR, Const: _CONST, Var: _VAR}


# --- atoms -------------------------------------------------------------------


@dataclass(frozen=True)
class Sym:
    """A matrix symbol, possibly transposed. ``shape`` is the untransposed shape."""

    kind: int
    name: str
    shape: Shape
    index: int = 0
    t: bool = False

    @cached_property
    def key(self) -> tuple:
        # Directions sort first, and Z' before Z, so a trace linear in Z
        # canonically starts with Z' and reads off as tr(Z' G).
        if self.kind == _DIR:
            return (_DIR, self.index, 0 if self.t else 1, self.name)
        return (self.kind, self.name, int(self.t))

    @property
    def rows(self) -> int:
        return self.shape.cols if self.t else self.shape.rows

    @property
    def cols(self) -> int:
        return self.shape.rows if self.t else self.shape.cols

    def flip(self) -> "Sym":
        return replace(self, t=not self.t)


@dataclass(frozen=True)
class Inv:
    """``inv(inner)``, or its transpose when ``t``; ``inner`` is oriented canonically."""

    inner: "MatNF"
    t: bool = False

    @cached_property
    def key(self) -> tuple:
        return (_INV, self.inner.key, int(self.t))

    @property
    def rows(self) -> int:
        return self.inner.shape.rows

    @property
    def cols(self) -> int:
        return self.inner.shape.rows

    def flip(self) -> "Inv":
        return replace(self, t=not self.t)

    @cached_property
    def inverted(self) -> "MatNF":
        """The matrix this atom is the inverse of."""
        return transpose(self.inner) if self.t else self.inner

    @cached_property
    def cancels(self) -> tuple | None:
        """Atom product that this inverse cancels against, if it is a bare product."""
        m = self.inverted
        if len(m.terms) == 1:
            (term,) = m.terms
            if term.coeff == 1 and not term.scal and term.facs:
                return term.facs
        return None


MatAtom = Union[Sym, Inv]


@dataclass(frozen=True)
class TrAtom:
    facs: tuple

    @cached_property
    def key(self) -> tuple:
        return (0, _facs_key(self.facs))


@dataclass(frozen=True)
class LDAtom:
    inner: "MatNF"

    @cached_property
    def key(self) -> tuple:
        return (1, self.inner.key)


ScalarAtom = Union[TrAtom, LDAtom]


def _facs_key(facs) -> tuple:
    return tuple(a.key for a in facs)


def _scal_key(atoms) -> tuple:
    return tuple(a.key for a in atoms)


# --- normal forms ------------------------------------------------------------


@dataclass(frozen=True)
class MTerm:
    coeff: Fraction
    scal: tuple
    facs: tuple


@dataclass(frozen=True)
class MatNF:
    shape: Shape
    terms: tuple

    @cached_property
    def key(self) -> tuple:
        return (self.shape.rows, self.shape.cols,
                tuple((_facs_key(t.facs), _scal_key(t.scal), t.coeff) for t in self.terms))


@dataclass(frozen=True)
class STerm:
    coeff: Fraction
    atoms: tuple


@dataclass(frozen=True)
class ScalarNF:
    terms: tuple

    @cached_property
    def key(self) -> tuple:
        return tuple((_scal_key(t.atoms), t.coeff) for t in self.terms)


NF = Union[MatNF, ScalarNF]


def _sorted_atoms(atoms) -> tuple:
    return tuple(sorted(atoms, key=lambda a: a.key))


def mat(shape: Shape, terms) -> MatNF:
    acc: dict = {}
    for t in terms:
        k = (t.facs, t.scal)
        acc[k] = acc.get(k, 0) + t.coeff
    out = [MTerm(Fraction(c), s, f) for (f, s), c in acc.items() if c != 0]
    out.sort(key=lambda t: (_facs_key(t.facs), _scal_key(t.scal)))
    return MatNF(shape, tuple(out))


def scalar(terms) -> ScalarNF:
    acc: dict = {}
    for t in terms:
        acc[t.atoms] = acc.get(t.atoms, 0) + t.coeff
    out = [STerm(Fraction(c), a) for a, c in acc.items() if c != 0]
    out.sort(key=lambda t: _scal_key(t.atoms))
    return ScalarNF(tuple(out))


def identity(n: int, coeff=1) -> MatNF:
    return mat(Shape(n, n), [MTerm(Fraction(coeff), (), ())])


def constant(c) -> ScalarNF:
    return scalar([STerm(Fraction(c), ())])


def add(a: NF, b: NF) -> NF:
    if isinstance(a, MatNF):
        return mat(a.shape, a.terms + b.terms)
    return scalar(a.terms + b.terms)


def neg(a: NF) -> NF:
    if isinstance(a, MatNF):
        return MatNF(a.shape, tuple(replace(t, coeff=-t.coeff) for t in a.terms))
    return ScalarNF(tuple(replace(t, coeff=-t.coeff) for t in a.terms))


def smul(a: ScalarNF, b: ScalarNF) -> ScalarNF:
    return scalar(STerm(x.coeff * y.coeff, _sorted_atoms(x.atoms + y.atoms))
                  for x in a.terms for y in b.terms)


def scale(s: ScalarNF, m: MatNF) -> MatNF:
    return mat(m.shape, [MTerm(x.coeff * t.coeff, _sorted_atoms(x.atoms + t.scal), t.facs)
                         for x in s.terms for t in m.terms])


def matmul(a: MatNF, b: MatNF) -> MatNF:
    shape = Shape(a.shape.rows, b.shape.cols)
    return mat(shape, [MTerm(x.coeff * y.coeff, _sorted_atoms(x.scal + y.scal), _reduce(x.facs + y.facs))
                       for x in a.terms for y in b.terms])


def _flip_facs(facs) -> tuple:
    return tuple(a.flip() for a in reversed(facs))


def transpose(a: MatNF) -> MatNF:
    return mat(a.shape.T, [replace(t, facs=_flip_facs(t.facs)) for t in a.terms])


def _reduce(facs) -> tuple:
    """Cancel ``inv(P) P`` and ``P inv(P)`` where P is a bare atom product."""
    facs = tuple(facs)
    changed = True
    while changed:
        changed = False
        for i, a in enumerate(facs):
            if not isinstance(a, Inv) or a.cancels is None:
                continue
            q = a.cancels
            m = len(q)
            if facs[i + 1:i + 1 + m] == q:
                facs = facs[:i] + facs[i + 1 + m:]
                changed = True
                break
            if i >= m and facs[i - m:i] == q:
                facs = facs[:i - m] + facs[i + 1:]
                changed = True
                break
    return facs


def inverse(a: MatNF) -> MatNF:
    n = a.shape.rows
    if len(a.terms) == 1 and not a.terms[0].scal:
        (t,) = a.terms
        c = t.coeff
        if not t.facs:
            return identity(n, 1 / c)
        if len(t.facs) == 1 and isinstance(t.facs[0], Inv):
            return scale(constant(1 / c), t.facs[0].inverted)
        if c != 1:
            return scale(constant(1 / c), inverse(mat(a.shape, [replace(t, coeff=Fraction(1))])))
    at = transpose(a)
    atom = Inv(at, True) if at.key < a.key else Inv(a, False)
    return mat(a.shape, [MTerm(Fraction(1), (), (atom,))])


def _is_dir(a) -> bool:
    return isinstance(a, Sym) and a.kind == _DIR


def _canon_trace(facs) -> tuple:
    """Least rotation over both orientations, after cyclic cancellation.

    Candidates with fewer transposed atoms win, not counting the
    lowest-index direction; ties go to the atom order, which prefers a
    leading D' so that read-off as tr(D' G) needs no flip.
    """
    facs = tuple(facs)
    shrunk = True
    while shrunk and facs:
        shrunk = False
        for i in range(len(facs)):
            rot = facs[i:] + facs[:i]
            red = _reduce(rot)
            if len(red) < len(facs):
                facs = red
                shrunk = True
                break
    if not facs:
        return ()
    cands = []
    for seq in (facs, _flip_facs(facs)):
        for i in range(len(seq)):
            cands.append(seq[i:] + seq[:i])
    lead = min((a.index for a in facs if _is_dir(a)), default=None)

    def transposes(c):
        return sum(a.t for a in c if not (_is_dir(a) and a.index == lead))

    return min(cands, key=lambda c: (transposes(c), _facs_key(c)))


def trace(a: MatNF) -> ScalarNF:
    n = a.shape.rows
    out = []
    for t in a.terms:
        facs = _canon_trace(t.facs)
        if not facs:
            out.append(STerm(t.coeff * n, t.scal))
        else:
            out.append(STerm(t.coeff, _sorted_atoms(t.scal + (TrAtom(facs),))))
    return scalar(out)


def logdet(a: MatNF) -> ScalarNF:
    if len(a.terms) == 1:
        (t,) = a.terms
        if t.coeff == 1 and not t.scal:
            if not t.facs:
                return scalar([])
            if len(t.facs) == 1 and isinstance(t.facs[0], Inv):
                return neg(logdet(t.facs[0].inverted))
    at = transpose(a)
    return scalar([STerm(Fraction(1), (LDAtom(min(a, at, key=lambda m: m.key)),))])


# --- Expr -> NF ------------------------------------------------------------------


def normal_form(e: Expr) -> NF:
    if isinstance(e, (Const, Var, Dir)):
        atom = Sym(_KIND[type(e)], e.name, e.shape, getattr(e, "index", 0))
        return mat(e.shape, [MTerm(Fraction(1), (), (atom,))])
    if isinstance(e, Identity):
        return identity(e.n)
    if isinstance(e, Zero):
        return MatNF(e.shape, ())
    if isinstance(e, Add):
        out = normal_form(e.terms[0])
        for t in e.terms[1:]:
            out = add(out, normal_form(t))
        return out
    if isinstance(e, (Neg, SNeg)):
        return neg(normal_form(e.arg))
    if isinstance(e, ScalarMul):
        return scale(normal_form(e.coeff), normal_form(e.arg))
    if isinstance(e, MatMul):
        return matmul(normal_form(e.left), normal_form(e.right))
    if isinstance(e, Transpose):
        return transpose(normal_form(e.arg))
    if isinstance(e, Inverse):
        return inverse(normal_form(e.arg))
    if isinstance(e, Lit):
        return constant(e.value)
    if isinstance(e, Trace):
        return trace(normal_form(e.arg))
    if isinstance(e, LogDet):
        return logdet(normal_form(e.arg))
    if isinstance(e, SAdd):
        return scalar(t for x in e.terms for t in normal_form(x).terms)
    if isinstance(e, SMul):
        out = constant(1)
        for f in e.factors:
            out = smul(out, normal_form(f))
        return out
    raise TypeError(f"not an expression: {e!r}")


# --- NF -> Expr ------------------------------------------------------------------


def _atom_expr(a: MatAtom) -> MatExpr:
    if isinstance(a, Sym):
        if a.kind == _DIR:
            base = Dir(a.name, a.shape, a.index)
        elif a.kind == _CONST:
            base = Const(a.name, a.shape)
        else:
            base = Var(a.name, a.shape)
    else:
        base = Inverse(build(a.inner))
    return Transpose(base) if a.t else base


def _product(facs, n_if_empty: int) -> MatExpr:
    if not facs:
        return Identity(n_if_empty)
    out = _atom_expr(facs[-1])
    for a in reversed(facs[:-1]):
        out = MatMul(_atom_expr(a), out)
    return out


def _scalar_atom_expr(a: ScalarAtom) -> ScalarExpr:
    if isinstance(a, TrAtom):
        return Trace(_product(a.facs, 0))
    return LogDet(build(a.inner))


def _coeff_expr(c: Fraction, scal) -> ScalarExpr | None:
    """Positive coefficient times scalar atoms; None when it is exactly 1."""
    parts = [_scalar_atom_expr(s) for s in scal]
    if c != 1:
        parts.insert(0, Lit(c))
    if not parts:
        return None
    return parts[0] if len(parts) == 1 else SMul(tuple(parts))


def _signed(c: Fraction, scal, body: MatExpr) -> MatExpr:
    coeff = _coeff_expr(abs(c), scal)
    out = body if coeff is None else ScalarMul(coeff, body)
    return Neg(out) if c < 0 else out


def _monomial(t: STerm) -> ScalarExpr:
    coeff = _coeff_expr(abs(t.coeff), t.atoms)
    out = Lit(abs(t.coeff)) if coeff is None else coeff
    return SNeg(out) if t.coeff < 0 else out


def _sum_expr(terms, shape: Shape) -> MatExpr:
    if not terms:
        return Zero(shape)
    if len(terms) == 1:
        (t,) = terms
        return _signed(t.coeff, t.scal, _product(t.facs, shape.rows))
    if all(t.facs == terms[0].facs for t in terms):
        # same atom product, differing scalar parts: (s1 + s2)*P
        coeff = build(scalar(STerm(t.coeff, t.scal) for t in terms))
        return ScalarMul(coeff, _product(terms[0].facs, shape.rows))
    shortest = min(len(t.facs) for t in terms)
    p = 0
    while p < shortest and all(t.facs[p] == terms[0].facs[p] for t in terms):
        p += 1
    s = 0
    while s < shortest - p and all(t.facs[len(t.facs) - 1 - s] == terms[0].facs[len(terms[0].facs) - 1 - s] for t in terms):
        s += 1
    if p == 0 and s == 0:
        return Add(tuple(_signed(t.coeff, t.scal, _product(t.facs, shape.rows)) for t in terms))
    head = terms[0].facs[:p]
    tail = terms[0].facs[len(terms[0].facs) - s:]
    rows = head[-1].cols if head else shape.rows
    cols = tail[0].rows if tail else shape.cols
    middle = mat(Shape(rows, cols), [replace(t, facs=t.facs[p:len(t.facs) - s]) for t in terms])
    parts = [_atom_expr(a) for a in head] + [_sum_expr(middle.terms, middle.shape)] + [_atom_expr(a) for a in tail]
    out = parts[-1]
    for x in reversed(parts[:-1]):
        out = MatMul(x, out)
    return out


def build(nf: NF) -> Expr:
    """Rebuild a (factored) expression tree from a normal form."""
    if isinstance(nf, MatNF):
        return _sum_expr(nf.terms, nf.shape)
    if not nf.terms:
        return Lit(Fraction(0))
    groups: dict = defaultdict(list)
    for t in nf.terms:
        if len(t.atoms) == 1 and isinstance(t.atoms[0], TrAtom):
            groups[t.atoms[0].facs[0].key].append(t)
    items: list[ScalarExpr] = []
    done: set = set()
    for t in nf.terms:
        if len(t.atoms) == 1 and isinstance(t.atoms[0], TrAtom):
            gk = t.atoms[0].facs[0].key
            group = groups[gk]
            if len(group) > 1:
                if gk in done:
                    continue
                done.add(gk)
                n = group[0].atoms[0].facs[0].rows
                inner = mat(Shape(n, n), [MTerm(g.coeff, (), g.atoms[0].facs) for g in group])
                items.append(Trace(_sum_expr(inner.terms, inner.shape)))
                continue
        items.append(_monomial(t))
    return items[0] if len(items) == 1 else SAdd(tuple(items))


def simplify(e: Expr) -> Expr:
    """Canonical, semantically equal form of ``e``."""
    return build(normal_form(e))


def equivalent(a: Expr, b: Expr) -> bool:
    """True when ``a`` and ``b`` share a normal form (hence agree for every binding)."""
    na, nb = normal_form(a), normal_form(b)
    if isinstance(na, MatNF) != isinstance(nb, MatNF):
        return False
    return na == nb


# --- linear read-off ---------------------------------------------------------------


def _mentions(x, index: int) -> bool:
    if isinstance(x, Sym):
        return x.kind == _DIR and x.index == index
    if isinstance(x, Inv):
        return _mentions(x.inner, index)
    if isinstance(x, MatNF):
        return any(_mentions(a, index) for t in x.terms for a in t.facs + t.scal)
    if isinstance(x, TrAtom):
        return any(_mentions(a, index) for a in x.facs)
    if isinstance(x, LDAtom):
        return _mentions(x.inner, index)
    raise TypeError(x)


def read_linear(s: ScalarNF, index: int, shape: Shape) -> MatNF:
    """The matrix G with ``s == tr(D' G)`` where D is direction ``index``.

    Each monomial must contain the direction exactly once, as a bare factor
    inside a trace; the trace is rotated so the direction comes first (as
    D', transposing the whole trace if needed) and the rest is read off.
    """
    out = []
    for t in s.terms:
        hits = []
        for j, atom in enumerate(t.atoms):
            if not _mentions(atom, index):
                continue
            if not isinstance(atom, TrAtom):
                raise NotReducible(f"direction {index} appears inside a log-determinant")
            for i, a in enumerate(atom.facs):
                if isinstance(a, Inv) and _mentions(a, index):
                    raise NotReducible(f"direction {index} appears inside an inverse")
                if isinstance(a, Sym) and _mentions(a, index):
                    hits.append((j, i))
        if len(hits) != 1:
            raise NotReducible(f"term is not linear in direction {index} ({len(hits)} occurrences)")
        (j, i), = hits
        facs = t.atoms[j].facs
        d = facs[i]
        rest = facs[i + 1:] + facs[:i]
        g = rest if d.t else _flip_facs(rest)
        others = t.atoms[:j] + t.atoms[j + 1:]
        out.append(MTerm(t.coeff, others, _reduce(g)))
    return mat(shape, out)
