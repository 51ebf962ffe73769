"""Recursive-descent parser for the expression language.

    expr    := term (('+'|'-') term)*
    term    := factor ('*' factor)*
    factor  := rational | matom | '-' factor
    matom   := ident postfix* | 'tr' '(' expr ')' | 'logdet' '(' expr ')'
             | 'inv' '(' expr ')' | 'I' '(' integer ')' | '(' expr ')' postfix*
    postfix := "'"

Products fold to the right, so ``a*b*c`` is ``MatMul(a, MatMul(b, c))``.
A postfix transpose is also accepted after ``inv(...)`` and ``I(n)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from mcalc.errors import ExprSyntaxError, ShapeMismatch, UnknownSymbol
from mcalc.expr.ast import (
    Add, Expr, Identity, Inverse, Lit, LogDet, MatExpr, MatMul, Neg, SAdd,
    ScalarExpr, ScalarMul, SMul, SNeg, Trace, Transpose,
)
from mcalc.expr.decls import Decl, symbol_table

_TOKEN_RE = re.compile(r"\s*(?:(?P<int>\d+)|(?P<ident>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/()']))")

_FUNCS = {"tr": Trace, "logdet": LogDet, "inv": Inverse}


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "ident", "op", "eof"
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    toks = []
    pos = 0
    line, line_start = 1, 0
    while True:
        while pos < len(text) and text[pos].isspace():
            if text[pos] == "\n":
                line, line_start = line + 1, pos + 1
            pos += 1
        if pos >= len(text):
            toks.append(Token("eof", "", line, pos - line_start + 1))
            return toks
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError(line, pos - line_start + 1, "a number, identifier or operator", text)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(Token(kind, m.group(kind), line, start - line_start + 1))
        pos = m.end()


class Parser:
    def __init__(self, text: str, decls: Mapping[str, Decl]):
        self.text = text
        self.decls = decls
        self.toks = tokenize(text)
        self.i = 0

    # --- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def _peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def _fail(self, expected: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ExprSyntaxError(tok.line, tok.col, expected, self.text)

    def _at(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def _expect(self, text: str) -> Token:
        if not self._at(text):
            self._fail(repr(text))
        t = self.tok
        self.i += 1
        return t

    # --- grammar

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "eof":
            self._fail("an operator or end of input")
        return e

    def expr(self) -> Expr:
        first = self.term()
        terms = [first]
        while self._at("+") or self._at("-"):
            neg = self.tok.text == "-"
            self.i += 1
            t = self.term()
            if neg:
                t = SNeg(t) if isinstance(t, ScalarExpr) else Neg(t)
            terms.append(t)
        if len(terms) == 1:
            return first
        if isinstance(first, ScalarExpr):
            return SAdd(tuple(terms))
        return Add(tuple(terms))

    def term(self) -> Expr:
        factors = [self.factor()]
        while self._at("*"):
            self.i += 1
            factors.append(self.factor())
        out = factors[-1]
        for f in reversed(factors[:-1]):
            out = _combine(f, out)
        return out

    def factor(self) -> Expr:
        if self._at("-"):
            self.i += 1
            f = self.factor()
            return SNeg(f) if isinstance(f, ScalarExpr) else Neg(f)
        if self.tok.kind == "int":
            num = int(self.tok.text)
            self.i += 1
            if self._at("/"):
                self.i += 1
                if self.tok.kind != "int":
                    self._fail("an integer denominator")
                den = int(self.tok.text)
                if den == 0:
                    self._fail("a nonzero denominator")
                self.i += 1
                return Lit(Fraction(num, den))
            return Lit(Fraction(num))
        return self.matom()

    def matom(self) -> Expr:
        tok = self.tok
        if tok.kind == "ident":
            nxt = self._peek()
            is_call = nxt.kind == "op" and nxt.text == "("
            if tok.text in _FUNCS and is_call:
                self.i += 2
                inner = self.expr()
                self._expect(")")
                node = _FUNCS[tok.text](inner)
            elif tok.text == "I" and is_call:
                self.i += 2
                if self.tok.kind != "int":
                    self._fail("an integer dimension")
                n = int(self.tok.text)
                self.i += 1
                self._expect(")")
                node = Identity(n)
            else:
                d = self.decls.get(tok.text)
                if d is None:
                    raise UnknownSymbol(tok.text)
                self.i += 1
                node = d.node()
        elif self._at("("):
            self.i += 1
            node = self.expr()
            self._expect(")")
        else:
            self._fail("a number, symbol, function or '('")
        while self._at("'"):
            if not isinstance(node, MatExpr):
                raise ShapeMismatch("Transpose", "matrix", "scalar")
            self.i += 1
            node = Transpose(node)
        return node


def _combine(a: Expr, b: Expr) -> Expr:
    a_s, b_s = isinstance(a, ScalarExpr), isinstance(b, ScalarExpr)
    if a_s and b_s:
        fa = a.factors if isinstance(a, SMul) else (a,)
        fb = b.factors if isinstance(b, SMul) else (b,)
        return SMul(fa + fb)
    if a_s:
        if isinstance(b, ScalarMul):
            return ScalarMul(_combine(a, b.coeff), b.arg)
        return ScalarMul(a, b)
    if b_s:
        return ScalarMul(b, a)
    return MatMul(a, b)


def parse(text: str, decls: Mapping[str, Decl] | Iterable[Decl | str]) -> Expr:
    """Parse ``text`` against a symbol table (or an iterable of declarations)."""
    if not isinstance(decls, Mapping):
        decls = symbol_table(decls)
    return Parser(text, decls).parse()
