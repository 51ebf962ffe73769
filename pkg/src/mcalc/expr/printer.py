"""Text, LaTeX and JSON renderings of expressions.

The text form is the parser's input language; for every tree produced by
``simplify`` (zero matrices aside, which the grammar cannot spell),
``parse(format_expr(e)) == e`` holds structurally.
"""

from __future__ import annotations

import json
from fractions import Fraction

from mcalc.expr.ast import (
    SCALAR, Add, Const, Dir, Expr, Identity, Inverse, Lit, LogDet, MatExpr,
    MatMul, Neg, SAdd, ScalarMul, Shape, SMul, SNeg, Trace, Transpose, Var,
    Zero,
)

_ATOM, _UNARY, _PROD, _SUM = range(4)


def _level(e) -> int:
    if isinstance(e, (Add, SAdd)):
        return _SUM
    if isinstance(e, (MatMul, ScalarMul, SMul)):
        return _PROD
    if isinstance(e, (Neg, SNeg)):
        return _UNARY
    if isinstance(e, Lit) and e.value < 0:
        return _UNARY
    return _ATOM


def _lit(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def format_expr(e: Expr) -> str:
    return _fmt(e)


def _paren(e, cond: bool) -> str:
    s = _fmt(e)
    return f"({s})" if cond else s


def _fmt(e) -> str:
    if isinstance(e, (Const, Var, Dir)):
        return e.name
    if isinstance(e, Identity):
        return f"I({e.n})"
    if isinstance(e, Zero):
        return "0"
    if isinstance(e, Lit):
        return _lit(e.value)
    if isinstance(e, Transpose):
        simple = isinstance(e.arg, (Const, Var, Dir, Identity, Inverse, Transpose))
        return _paren(e.arg, not simple) + "'"
    if isinstance(e, Inverse):
        return f"inv({_fmt(e.arg)})"
    if isinstance(e, Trace):
        return f"tr({_fmt(e.arg)})"
    if isinstance(e, LogDet):
        return f"logdet({_fmt(e.arg)})"
    if isinstance(e, (Neg, SNeg)):
        return "-" + _paren(e.arg, _level(e.arg) != _ATOM)
    if isinstance(e, (Add, SAdd)):
        parts = []
        for i, t in enumerate(e.terms):
            if i and isinstance(t, (Neg, SNeg)):
                parts.append(" - " + _paren(t.arg, _level(t.arg) in (_SUM, _UNARY)))
            elif i:
                parts.append(" + " + _paren(t, _level(t) in (_SUM, _UNARY)))
            else:
                parts.append(_paren(t, _level(t) == _SUM))
        return "".join(parts)
    if isinstance(e, MatMul):
        left = _paren(e.left, _level(e.left) != _ATOM)
        right = _paren(e.right, _level(e.right) in (_SUM, _UNARY) or isinstance(e.right, ScalarMul))
        return f"{left}*{right}"
    if isinstance(e, ScalarMul):
        coeff = _paren(e.coeff, _level(e.coeff) in (_SUM, _UNARY))
        arg = _paren(e.arg, _level(e.arg) in (_SUM, _UNARY) or isinstance(e.arg, ScalarMul))
        return f"{coeff}*{arg}"
    if isinstance(e, SMul):
        return "*".join(_paren(f, _level(f) != _ATOM) for f in e.factors)
    raise TypeError(f"cannot format {type(e).__name__}")


# --- LaTeX -------------------------------------------------------------------


def _tex_name(name: str) -> str:
    head = name.rstrip("0123456789")
    tail = name[len(head):]
    head = head.replace("_", r"\_")
    return f"{head}_{{{tail}}}" if tail and head else head


def format_latex(e: Expr) -> str:
    return _tex(e)


def _tp(e, cond: bool) -> str:
    s = _tex(e)
    return rf"\left({s}\right)" if cond else s


def _tex(e) -> str:
    if isinstance(e, (Const, Var, Dir)):
        return _tex_name(e.name)
    if isinstance(e, Identity):
        return f"I_{{{e.n}}}"
    if isinstance(e, Zero):
        return "0"
    if isinstance(e, Lit):
        v = e.value
        s = str(abs(v.numerator)) if v.denominator == 1 else rf"\frac{{{abs(v.numerator)}}}{{{v.denominator}}}"
        return s if v >= 0 else f"-{s}"
    if isinstance(e, Transpose):
        return _tp(e.arg, not isinstance(e.arg, (Const, Var, Dir, Identity))) + r"^{\top}"
    if isinstance(e, Inverse):
        return _tp(e.arg, not isinstance(e.arg, (Const, Var, Dir))) + "^{-1}"
    if isinstance(e, Trace):
        return rf"\operatorname{{tr}}\left\{{{_tex(e.arg)}\right\}}"
    if isinstance(e, LogDet):
        return rf"\log\det\left({_tex(e.arg)}\right)"
    if isinstance(e, (Neg, SNeg)):
        return "-" + _tp(e.arg, _level(e.arg) in (_SUM, _UNARY))
    if isinstance(e, (Add, SAdd)):
        out = []
        for i, t in enumerate(e.terms):
            if i and isinstance(t, (Neg, SNeg)):
                out.append(" - " + _tp(t.arg, _level(t.arg) in (_SUM, _UNARY)))
            elif i:
                out.append(" + " + _tp(t, _level(t) == _SUM))
            else:
                out.append(_tp(t, _level(t) == _SUM))
        return "".join(out)
    if isinstance(e, MatMul):
        return _tp(e.left, _level(e.left) in (_SUM, _UNARY)) + " " + _tp(e.right, _level(e.right) in (_SUM, _UNARY))
    if isinstance(e, ScalarMul):
        return _tp(e.coeff, _level(e.coeff) in (_SUM, _UNARY)) + " " + _tp(e.arg, _level(e.arg) in (_SUM, _UNARY))
    if isinstance(e, SMul):
        return " ".join(_tp(f, _level(f) in (_SUM, _UNARY)) for f in e.factors)
    raise TypeError(f"cannot format {type(e).__name__}")


# --- JSON AST ------------------------------------------------------------------


def to_json_obj(e: Expr) -> dict:
    """Nested dict with stable key order: op, shape, payload, children."""
    shape = None if e.shape is SCALAR else [e.shape.rows, e.shape.cols]
    node: dict = {"op": e.tag, "shape": shape}
    if isinstance(e, (Const, Var)):
        node["name"] = e.name
    elif isinstance(e, Dir):
        node["name"] = e.name
        node["index"] = e.index
    elif isinstance(e, Identity):
        node["n"] = e.n
    elif isinstance(e, Lit):
        node["value"] = _lit(e.value)
    node["children"] = [to_json_obj(c) for c in e.children()]
    return node


def to_json(e: Expr, **kw) -> str:
    return json.dumps(to_json_obj(e), **kw)


_BUILD = {
    "Add": lambda o, ch: Add(tuple(ch)),
    "Neg": lambda o, ch: Neg(*ch),
    "ScalarMul": lambda o, ch: ScalarMul(*ch),
    "MatMul": lambda o, ch: MatMul(*ch),
    "Transpose": lambda o, ch: Transpose(*ch),
    "Inverse": lambda o, ch: Inverse(*ch),
    "Trace": lambda o, ch: Trace(*ch),
    "LogDet": lambda o, ch: LogDet(*ch),
    "SAdd": lambda o, ch: SAdd(tuple(ch)),
    "SMul": lambda o, ch: SMul(tuple(ch)),
    "SNeg": lambda o, ch: SNeg(*ch),
    "Const": lambda o, ch: Const(o["name"], Shape(*o["shape"])),
    "Var": lambda o, ch: Var(o["name"], Shape(*o["shape"])),
    "Dir": lambda o, ch: Dir(o["name"], Shape(*o["shape"]), o["index"]),
    "Identity": lambda o, ch: Identity(o["n"]),
    "Zero": lambda o, ch: Zero(Shape(*o["shape"])),
    "Lit": lambda o, ch: Lit(Fraction(o["value"])),
}


def from_json_obj(obj: dict) -> Expr:
    try:
        build = _BUILD[obj["op"]]
    except KeyError:
        raise ValueError(f"unknown op {obj.get('op')!r}") from None
    e = build(obj, [from_json_obj(c) for c in obj.get("children", [])])
    declared = obj.get("shape")
    actual = None if e.shape is SCALAR else [e.shape.rows, e.shape.cols]
    if declared != actual:
        raise ValueError(f"{obj['op']} node declares shape {declared}, infers {actual}")
    return e


def from_json(text: str) -> Expr:
    return from_json_obj(json.loads(text))


def is_matrix(e: Expr) -> bool:
    return isinstance(e, MatExpr)
