"""Float64 evaluation of expression trees."""

from __future__ import annotations

import numpy as np

from mcalc.errors import NonPositiveDeterminant, SingularMatrix
from mcalc.expr.ast import (
    Add, Const, Dir, Expr, Identity, Inverse, Lit, LogDet, MatMul, Neg, SAdd,
    ScalarMul, SMul, SNeg, Trace, Transpose, Var, Zero,
)
from mcalc.expr.decls import Env

_EPS = np.finfo(float).eps


def evaluate(e: Expr, env: Env):
    """Evaluate ``e``; matrices come back as 2-D arrays, scalars as floats."""
    return _ev(e, env)


def _ev(e, env: Env):
    if isinstance(e, (Const, Var, Dir)):
        return np.asarray(env[e.name], dtype=float)
    if isinstance(e, Identity):
        return np.eye(e.n)
    if isinstance(e, Zero):
        return np.zeros((e.shape.rows, e.shape.cols))
    if isinstance(e, Add):
        out = _ev(e.terms[0], env)
        for t in e.terms[1:]:
            out = out + _ev(t, env)
        return out
    if isinstance(e, Neg):
        return -_ev(e.arg, env)
    if isinstance(e, ScalarMul):
        return _ev(e.coeff, env) * _ev(e.arg, env)
    if isinstance(e, MatMul):
        return _ev(e.left, env) @ _ev(e.right, env)
    if isinstance(e, Transpose):
        return _ev(e.arg, env).T
    if isinstance(e, Inverse):
        m = _ev(e.arg, env)
        if np.linalg.cond(m) > 1.0 / _EPS:
            raise SingularMatrix(f"inverse of an ill-conditioned {m.shape[0]}x{m.shape[0]} matrix")
        return np.linalg.inv(m)
    if isinstance(e, Lit):
        return float(e.value)
    if isinstance(e, Trace):
        return float(np.trace(_ev(e.arg, env)))
    if isinstance(e, LogDet):
        sign, logabs = np.linalg.slogdet(_ev(e.arg, env))
        if sign <= 0:
            raise NonPositiveDeterminant("log-determinant of a matrix with det <= 0")
        return float(logabs)
    if isinstance(e, SAdd):
        return float(sum(_ev(t, env) for t in e.terms))
    if isinstance(e, SMul):
        out = 1.0
        for f in e.factors:
            out *= _ev(f, env)
        return float(out)
    if isinstance(e, SNeg):
        return -_ev(e.arg, env)
    raise TypeError(f"cannot evaluate {type(e).__name__}")
