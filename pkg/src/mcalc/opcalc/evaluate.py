"""Numeric evaluation of operator terms on concrete polynomial bindings.

A term applied to ``z1 (x) ... (x) zk`` is computed on pure tensors: each
factor maps a list of vectors (one per slot) to a shorter list, since
(A (x) B)(u (x) v) = Au (x) Bv. Factors are applied right to left.
"""

from __future__ import annotations

import itertools
from typing import Mapping

import numpy as np

from mcalc.errors import ArityMismatch, UnboundFunction
from mcalc.opcalc.polymap import PolyMap
from mcalc.opcalc.terms import Chain, Deriv, Func, Id, OpSum, OpTerm


def _lookup(bindings: Mapping[str, PolyMap], sym) -> PolyMap:
    try:
        return bindings[sym.name]
    except KeyError:
        raise UnboundFunction(f"function {sym.name!r} has no binding") from None


def _apply_atom(a, bindings, x, vecs):
    if isinstance(a, Id):
        return list(vecs)
    p = _lookup(bindings, a.func)
    at = _lookup(bindings, a.composed)(x) if a.composed is not None else x
    return [p.derivative(at, vecs)]


def _apply_chain(c: Chain, bindings, x, vecs):
    out = []
    pos = 0
    for it in c.items:
        n = len(it.inputs)
        part = vecs[pos:pos + n]
        pos += n
        if isinstance(it, Chain):
            out.extend(_apply_chain(it, bindings, x, part))
        else:
            out.extend(_apply_atom(it, bindings, x, part))
    return out


def _eval_one(t: OpTerm, bindings, x, dirs) -> np.ndarray:
    if len(dirs) != len(t.inputs):
        raise ArityMismatch(f"term takes {len(t.inputs)} directions, got {len(dirs)}")
    vecs = list(dirs)
    for f in reversed(t.factors):
        vecs = _apply_chain(f, bindings, x, vecs)
    (v,) = vecs
    return t.coeff * v


def evaluate_term(t: OpTerm | OpSum, bindings: Mapping[str, PolyMap], x, dirs,
                  symmetrize: bool = False, out_dim: int | None = None) -> np.ndarray:
    """Value of ``t`` at base point ``x`` on directions ``dirs``.

    The calculus keeps the order in which directions enter, so individual
    terms are only meaningful up to permutation of the directions. With
    ``symmetrize`` the result is averaged over all orderings, which is what
    compares against a symmetric derivative tensor.
    """
    x = np.asarray(x, dtype=float)
    dirs = [np.asarray(z, dtype=float) for z in dirs]
    terms = t.terms if isinstance(t, OpSum) else (t,)
    if not terms:
        if out_dim is None:
            raise ValueError("out_dim is required to evaluate an empty sum")
        return np.zeros(out_dim)
    orders = list(itertools.permutations(range(len(dirs)))) if symmetrize else [tuple(range(len(dirs)))]
    acc = None
    for perm in orders:
        zs = [dirs[i] for i in perm]
        for u in terms:
            v = _eval_one(u, bindings, x, zs)
            acc = v if acc is None else acc + v
    return acc / len(orders)
