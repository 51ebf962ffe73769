"""Differentiation and normalization of operator-calculus sums.

Rules applied by :func:`differentiate`, with the new direction always entering
through the leftmost slot:

    D(F1 F2 ... Fm) = sum_i F1..F(i-1) D(Fi) (I (x) F(i+1)) ... (I (x) Fm)
    D(a1 (x) ... (x) am) = sum_j a1 (x) .. D(aj) .. (x) am
    D(D^k f o g) = (D^(k+1) f o g)(Dg (x) I)       D(f o g) = (Df o g) Dg
    D(D^k g) = D^(k+1) g                            D(I) = 0

When an atom differentiates to a composition ``X Y`` inside a chain, the
chain splits into ``(.. X ..)(I .. Y .. I)`` by (A(x)B)(C(x)D) = AC(x)BD.
"""

from __future__ import annotations

from collections import OrderedDict

from mcalc.errors import SignatureMismatch
from mcalc.opcalc.terms import (
    Chain, Deriv, FuncSymbol, Func, Id, OpSum, OpTerm, SpaceLabel,
)


# --- normalization -----------------------------------------------------------


def _flat_atoms(c: Chain) -> list:
    out = []
    for a in c.atoms():
        if isinstance(a, Id):
            out.extend(Id((s,)) for s in a.spaces)
        else:
            out.append(a)
    return out


def flatten(c: Chain) -> Chain:
    """Drop nested brackets and split multi-slot identities into single slots."""
    return Chain(tuple(_flat_atoms(c)))


def _fuse(left: Chain, right: Chain) -> Chain | None:
    """Compose two flat chains slot by slot, or None if some slot is non-trivial."""
    r = list(right.items)
    if sum(len(a.inputs) for a in left.items) != len(r):
        raise SignatureMismatch(f"cannot compose chains with {len(left.inputs)} inputs and {len(r)} outputs")
    out = []
    pos = 0
    for a in left.items:
        n = len(a.inputs)
        group = r[pos:pos + n]
        pos += n
        if isinstance(a, Id):
            (b,) = group
            if b.outputs != a.spaces:
                raise SignatureMismatch(f"identity on {a.spaces[0]} applied to {b.outputs[0]}")
            out.append(b)
        elif all(isinstance(b, Id) for b in group):
            if tuple(s for b in group for s in b.spaces) != a.inputs:
                raise SignatureMismatch("identity slots do not match the operator's inputs")
            out.append(a)
        else:
            return None
    return Chain(tuple(out))


def normalize_term(t: OpTerm) -> OpTerm:
    factors = [flatten(f) for f in t.factors]
    changed = True
    while changed:
        changed = False
        for i in range(len(factors) - 1):
            fused = _fuse(factors[i], factors[i + 1])
            if fused is not None:
                factors[i:i + 2] = [fused]
                changed = True
                break
    kept = [f for f in factors if not f.is_identity]
    if not kept and factors:
        kept = [factors[0]]
    return OpTerm(t.coeff, tuple(kept))


def collect(terms) -> OpSum:
    """Sum coefficients of identical terms, drop zeros, sort canonically."""
    acc: OrderedDict = OrderedDict()
    for t in terms:
        k = t.factors
        acc[k] = acc.get(k, 0) + t.coeff
    out = [OpTerm(c, f) for f, c in acc.items() if c != 0]
    out.sort(key=lambda t: t.key)
    return OpSum(tuple(out))


def normalize(s: OpSum) -> OpSum:
    return collect(normalize_term(t) for t in s.terms)


# --- differentiation ------------------------------------------------------------


def _variable_space(s: OpSum) -> SpaceLabel | None:
    """Domain of the innermost functions, i.e. the space directions live in."""
    found = set()
    for t in s.terms:
        for f in t.factors:
            for a in f.atoms():
                if isinstance(a, (Deriv, Func)):
                    inner = a.composed if a.composed is not None else a.func
                    found.add(inner.domain)
    if len(found) > 1:
        raise SignatureMismatch(f"terms disagree on the variable space: {sorted(s.name for s in found)}")
    return found.pop() if found else None


def _d_atom(a):
    """Derivative of one atom: None (zero), a single atom, or a pair (X, Y) meaning X Y."""
    if isinstance(a, Id):
        return None
    if isinstance(a, Func):
        if a.composed is None:
            return Deriv(a.func, 1)
        return (Deriv(a.func, 1, a.composed), Chain((Deriv(a.composed, 1),)))
    if a.composed is None:
        return Deriv(a.func, a.order + 1)
    pad = (Id((a.func.domain,) * a.order),)
    return (Deriv(a.func, a.order + 1, a.composed), Chain((Deriv(a.composed, 1),) + pad))


def _d_chain(c: Chain):
    """Yield each Leibniz summand of D(chain) as a list of one or two factors."""
    items = list(c.items)
    for j, a in enumerate(items):
        da = _d_atom(a)
        if da is None:
            continue
        if not isinstance(da, tuple):
            yield [Chain(tuple(items[:j] + [da] + items[j + 1:]))]
            continue
        upper, lower = da
        if len(items) == 1:
            yield [Chain((upper,)), lower]
            continue
        inner = lower if len(lower.items) > 1 else lower.items[0]
        below = [Id(b.inputs) for b in items[:j] if b.inputs] + [inner] + \
                [Id(b.inputs) for b in items[j + 1:] if b.inputs]
        yield [Chain(tuple(items[:j] + [upper] + items[j + 1:])), Chain(tuple(below))]


def _pad(f: Chain, space: SpaceLabel) -> Chain:
    inner = f if len(f.items) > 1 else f.items[0]
    return Chain((Id((space,)), inner))


def differentiate_term(t: OpTerm, space: SpaceLabel) -> list[OpTerm]:
    factors = [flatten(f) for f in t.factors]
    out = []
    for i, f in enumerate(factors):
        padded = [_pad(g, space) for g in factors[i + 1:]]
        for piece in _d_chain(f):
            out.append(OpTerm(t.coeff, tuple(factors[:i] + piece + padded)))
    return out


def differentiate(s: OpSum, normalized: bool = True, space: SpaceLabel | None = None) -> OpSum:
    """Apply D term by term. With ``normalized=False`` the raw Leibniz expansion is returned."""
    space = space or _variable_space(s)
    if space is None:
        return OpSum(())
    raw = [u for t in s.terms for u in differentiate_term(t, space)]
    return normalize(OpSum(tuple(raw))) if normalized else OpSum(tuple(raw))


# --- composition expansion ------------------------------------------------------


def chain_rule_base(f: FuncSymbol, g: FuncSymbol) -> OpSum:
    """D(f o g) = (Df o g) Dg."""
    if g.codomain != f.domain:
        raise SignatureMismatch(f"cannot compose {f.name}: {f.domain} -> {f.codomain} "
                                f"after {g.name}: {g.domain} -> {g.codomain}")
    return OpSum((OpTerm(1, (Chain((Deriv(f, 1, g),)), Chain((Deriv(g, 1),)))),))


def expand_composition(f: FuncSymbol, g: FuncSymbol, k: int) -> OpSum:
    """Normal form of D^k(f o g)."""
    if k < 1:
        raise ValueError("order must be >= 1")
    s = chain_rule_base(f, g)
    for _ in range(k - 1):
        s = differentiate(s)
    return normalize(s)


def derivation(f: FuncSymbol, g: FuncSymbol, k: int) -> list[tuple[OpSum, OpSum]]:
    """(raw, normalized) sums for orders 1..k, each raw sum differentiating the previous normal form."""
    base = chain_rule_base(f, g)
    steps = [(base, normalize(base))]
    for _ in range(k - 1):
        raw = differentiate(steps[-1][1], normalized=False)
        steps.append((raw, normalize(raw)))
    return steps
