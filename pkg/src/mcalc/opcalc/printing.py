"""Pretty printing of operator-calculus terms in unicode, ASCII or LaTeX."""

from __future__ import annotations

from mcalc.opcalc.terms import Chain, Deriv, Func, Id, OpSum, OpTerm

_STYLES = {
    "unicode": {"o": "∘", "x": "⊗", "sep": "", "lb": "[", "rb": "]", "sup": lambda k: f"^{k}"},
    "ascii": {"o": " . ", "x": " (x) ", "sep": "", "lb": "[", "rb": "]", "sup": lambda k: f"^{k}"},
    "latex": {"o": r" \circ ", "x": r" \otimes ", "sep": r"\,", "lb": r"\big[", "rb": r"\big]",
              "sup": lambda k: f"^{{{k}}}"},
}


def _atom(a, st) -> str:
    if isinstance(a, Id):
        return "I"
    if isinstance(a, Func):
        return f"({a.func.name}{st['o']}{a.composed.name})" if a.composed else a.func.name
    d = "D" if a.order == 1 else "D" + st["sup"](a.order)
    body = f"{d}{a.func.name}"
    return f"({body}{st['o']}{a.composed.name})" if a.composed else body


def _item(it, st, nested: bool) -> str:
    if isinstance(it, Chain):
        inner = st["x"].join(_item(x, st, True) for x in it.items)
        return f"({inner})" if len(it.items) > 1 else inner
    return _atom(it, st)


def _factor(f: Chain, st) -> str:
    if len(f.items) == 1:
        return _item(f.items[0], st, False)
    return "(" + st["x"].join(_item(x, st, True) for x in f.items) + ")"


def _coeffed(coeff: int, body: str) -> str:
    return body if coeff == 1 else f"{coeff}{body}"


def _factors(fs, st) -> str:
    return st["sep"].join(_factor(f, st) for f in fs)


def _join(parts: list[tuple[int, str]]) -> str:
    out = ""
    for i, (c, body) in enumerate(parts):
        if i == 0:
            out = ("-" if c < 0 else "") + _coeffed(abs(c), body)
        else:
            out += (" - " if c < 0 else " + ") + _coeffed(abs(c), body)
    return out


def format_term(t: OpTerm | OpSum, style: str = "unicode", group: bool = True) -> str:
    """Render a term or sum.

    With ``group`` consecutive terms of equal length sharing a leading factor
    print as ``F[rest1 + rest2]``, the layout used for third derivatives.
    """
    st = _STYLES[style]
    terms = t.terms if isinstance(t, OpSum) else (t,)
    if not terms:
        return "0"
    parts: list[tuple[int, str]] = []
    i = 0
    while i < len(terms):
        t0 = terms[i]
        j = i + 1
        if group and len(t0.factors) > 1:
            # only same-length compositions share a bracket
            while (j < len(terms) and len(terms[j].factors) == len(t0.factors)
                   and terms[j].factors[0] == t0.factors[0]):
                j += 1
        if j - i > 1:
            inner = _join([(u.coeff, _factors(u.factors[1:], st)) for u in terms[i:j]])
            parts.append((1, _factor(t0.factors[0], st) + st["sep"] + st["lb"] + inner + st["rb"]))
        else:
            parts.append((t0.coeff, _factors(t0.factors, st)))
        i = j
    return _join(parts)


def _atom_obj(a) -> dict | list:
    if isinstance(a, Chain):
        return [_atom_obj(x) for x in a.items]
    if isinstance(a, Id):
        return {"atom": "Id", "spaces": [s.name for s in a.spaces]}
    out = {"atom": type(a).__name__, "func": a.func.name}
    if isinstance(a, Deriv):
        out["order"] = a.order
    out["composed"] = a.composed.name if a.composed else None
    return out


def to_json_obj(s: OpTerm | OpSum) -> dict:
    """{"terms": [{"coeff": c, "factors": [[atom, ...], ...]}, ...]}; nested chains stay nested lists."""
    terms = s.terms if isinstance(s, OpSum) else (s,)
    return {"terms": [{"coeff": t.coeff, "factors": [_atom_obj(f) for f in t.factors]} for t in terms]}
