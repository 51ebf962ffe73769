"""Symbolic directional (Frechet) derivatives, gradients and Hessian operators.

Derivatives are computed by structural rules, not limits:

    d(X) = Z                    d(const) = 0
    d(P Q) = d(P) Q + P d(Q)    d(P') = d(P)'
    d(tr P) = tr(d P)           d(inv P) = -inv(P) d(P) inv(P)
    d(logdet P) = tr(inv(P) d(P))

The direction of the k-th derivative is the reserved symbol Dir(k):
Z, T, Z3, ...  Gradients and Hessians are read off through the trace inner
product <G, Z> = tr(Z' G).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from mcalc.errors import UnsupportedNode
from mcalc.expr import canonical as nf
from mcalc.expr.ast import (
    Add, Const, Dir, Expr, Identity, Inverse, Lit, LogDet, MatExpr, MatMul,
    Neg, SAdd, ScalarExpr, ScalarMul, SMul, SNeg, Trace, Transpose, Var, Zero,
    direction_name, directions,
)
from mcalc.expr.decls import Env
from mcalc.expr.evaluate import evaluate

ZERO = Lit(Fraction(0))


@dataclass(frozen=True)
class DirectionalDerivative:
    expr: Expr
    wrt: str
    direction_index: int

    @property
    def direction(self) -> str:
        return direction_name(self.direction_index)


@dataclass(frozen=True)
class HessianOperator:
    """T -> H(T): ``expr`` is linear in direction 2 and shaped like the variable."""

    expr: MatExpr
    wrt: str

    def apply(self, env: Env, t: np.ndarray) -> np.ndarray:
        return evaluate(self.expr, env.bind(**{direction_name(2): t}))

    def bilinear(self, env: Env, z: np.ndarray, t: np.ndarray) -> float:
        """(D^2 f(X) . T) . Z = tr(Z' H(T))."""
        return float(np.sum(z * self.apply(env, t)))


# --- smart constructors that keep zeros out of the result ----------------------


def _is_zero(e: Expr) -> bool:
    return isinstance(e, Zero) or (isinstance(e, Lit) and e.value == 0)


def _add(a: Expr, b: Expr) -> Expr:
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    if isinstance(a, MatExpr):
        ta = a.terms if isinstance(a, Add) else (a,)
        tb = b.terms if isinstance(b, Add) else (b,)
        return Add(ta + tb)
    ta = a.terms if isinstance(a, SAdd) else (a,)
    tb = b.terms if isinstance(b, SAdd) else (b,)
    return SAdd(ta + tb)


def _neg(a: Expr) -> Expr:
    if _is_zero(a):
        return a
    if isinstance(a, (Neg, SNeg)):
        return a.arg
    return SNeg(a) if isinstance(a, ScalarExpr) else Neg(a)


def _mm(a: MatExpr, b: MatExpr) -> MatExpr:
    if isinstance(a, Zero) or isinstance(b, Zero):
        return Zero(MatMul(a, b).shape)
    return MatMul(a, b)


def _smul(s: ScalarExpr, m: MatExpr) -> MatExpr:
    if _is_zero(s) or isinstance(m, Zero):
        return Zero(m.shape)
    return ScalarMul(s, m)


def _trace(m: MatExpr) -> ScalarExpr:
    # distribute over sums so first derivatives read like tr(Z'AX) + tr(X'AZ)
    if isinstance(m, Zero):
        return ZERO
    if isinstance(m, Add):
        out: Expr = ZERO
        for t in m.terms:
            out = _add(out, _trace(t))
        return out
    if isinstance(m, Neg):
        return _neg(_trace(m.arg))
    return Trace(m)


def _d(e: Expr, x: Var, dvar: Dir) -> Expr:
    if isinstance(e, Var):
        return dvar if e.name == x.name else Zero(e.shape)
    if isinstance(e, (Const, Dir, Identity, Zero)):
        return Zero(e.shape)
    if isinstance(e, Add):
        out = Zero(e.shape)
        for t in e.terms:
            out = _add(out, _d(t, x, dvar))
        return out
    if isinstance(e, Neg):
        return _neg(_d(e.arg, x, dvar))
    if isinstance(e, ScalarMul):
        return _add(_smul(_d(e.coeff, x, dvar), e.arg), _smul(e.coeff, _d(e.arg, x, dvar)))
    if isinstance(e, MatMul):
        return _add(_mm(_d(e.left, x, dvar), e.right), _mm(e.left, _d(e.right, x, dvar)))
    if isinstance(e, Transpose):
        inner = _d(e.arg, x, dvar)
        return Zero(e.shape) if isinstance(inner, Zero) else Transpose(inner)
    if isinstance(e, Inverse):
        inner = _d(e.arg, x, dvar)
        return _neg(_mm(e, _mm(inner, e)))
    if isinstance(e, Lit):
        return ZERO
    if isinstance(e, Trace):
        return _trace(_d(e.arg, x, dvar))
    if isinstance(e, LogDet):
        return _trace(_mm(Inverse(e.arg), _d(e.arg, x, dvar)))
    if isinstance(e, SAdd):
        out = ZERO
        for t in e.terms:
            out = _add(out, _d(t, x, dvar))
        return out
    if isinstance(e, SNeg):
        return _neg(_d(e.arg, x, dvar))
    if isinstance(e, SMul):
        out = ZERO
        for i in range(len(e.factors)):
            di = _d(e.factors[i], x, dvar)
            if _is_zero(di):
                continue
            rest = e.factors[:i] + (di,) + e.factors[i + 1:]
            out = _add(out, SMul(rest))
        return out
    raise UnsupportedNode(f"no differentiation rule for {type(e).__name__}")


def d(e: Expr, x: Var | str, k: int = 1, shape=None) -> DirectionalDerivative:
    """Directional derivative of ``e`` with respect to ``x`` along direction ``k``.

    ``x`` may be a :class:`Var` or a variable name occurring in ``e``.
    """
    x = _resolve_var(e, x, shape)
    if k in directions(e):
        raise ValueError(f"direction {k} ({direction_name(k)}) is already used in the expression")
    dvar = Dir(direction_name(k), x.shape, k)
    return DirectionalDerivative(_d(e, x, dvar), x.name, k)


def _resolve_var(e: Expr, x, shape) -> Var:
    if isinstance(x, Var):
        return x
    for n in e.walk():
        if isinstance(n, Var) and n.name == x:
            return n
        if isinstance(n, (Const, Dir)) and n.name == x:
            raise ValueError(f"{x} is declared {type(n).__name__.lower()}, not var")
    if shape is None:
        raise ValueError(f"variable {x!r} does not occur in the expression; pass its shape")
    return Var(x, shape)


def directional(e: Expr, x: Var | str, order: int = 1, shape=None) -> DirectionalDerivative:
    """``order``-th derivative, taking direction k at step k (Z, then T, then Z3...)."""
    out = d(e, x, 1, shape)
    for k in range(2, order + 1):
        var = _resolve_var(e, x, shape)
        out = d(out.expr, var, k)
    return out


def gradient(f: ScalarExpr, x: Var | str, shape=None) -> MatExpr:
    """The matrix G with Df(X).Z = tr(Z' G)."""
    if not isinstance(f, ScalarExpr):
        raise TypeError("gradient needs a scalar-valued expression")
    dd = d(f, x, 1, shape)
    var = _resolve_var(f, x, shape)
    g = nf.read_linear(nf.normal_form(dd.expr), 1, var.shape)
    return nf.build(g)


def hessian(f: ScalarExpr, x: Var | str, shape=None) -> HessianOperator:
    """Differentiate Df(X).Z once more along T with Z held fixed, then read off H(T)."""
    if not isinstance(f, ScalarExpr):
        raise TypeError("hessian needs a scalar-valued expression")
    var = _resolve_var(f, x, shape)
    first = d(f, var, 1)
    second = d(first.expr, var, 2)
    h = nf.read_linear(nf.normal_form(second.expr), 1, var.shape)
    return HessianOperator(nf.build(h), var.name)
