"""A small fixed set of expressions used by the verifier, the CLI and the tests."""

from __future__ import annotations

from dataclasses import dataclass

from mcalc.expr import Expr, parse, symbol_table


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    text: str
    decls: tuple
    wrt: str = "X"
    square: str = "well_conditioned"  # how random square matrices are drawn

    @property
    def table(self):
        return symbol_table(self.decls)

    def parse(self) -> Expr:
        return parse(self.text, self.table)


CORPUS: tuple[CorpusEntry, ...] = (
    CorpusEntry("rayleigh", "tr(X'*A*X)", ("X:3x2:var", "A:3x3:const")),
    CorpusEntry("linear", "tr(B'*X)", ("X:3x2:var", "B:3x2:const")),
    CorpusEntry("logdet", "logdet(X)", ("X:4x4:var",), square="spd"),
    CorpusEntry("trace_inverse", "tr(A*inv(X))", ("X:3x3:var", "A:3x3:const")),
    CorpusEntry("cubic_trace", "tr(X*X*X)", ("X:3x3:var",)),
    CorpusEntry("logdet_gram", "logdet(X'*X + I(2))", ("X:3x2:var",)),
    CorpusEntry("trace_product", "tr(X)*tr(X'*A*X)", ("X:3x3:var", "A:3x3:const")),
    CorpusEntry("logdet_inverse", "logdet(inv(X))", ("X:3x3:var",), square="spd"),
    CorpusEntry("constant", "tr(A) + 2", ("X:2x2:var", "A:2x2:const")),
    CorpusEntry("inverse", "inv(X)", ("X:3x3:var",)),
    CorpusEntry("quadratic_form", "X'*A*X", ("X:3x2:var", "A:3x3:const")),
)


def scalar_entries() -> tuple[CorpusEntry, ...]:
    from mcalc.expr import ScalarExpr

    return tuple(c for c in CORPUS if isinstance(c.parse(), ScalarExpr))


def get(name: str) -> CorpusEntry:
    for c in CORPUS:
        if c.name == name:
            return c
    raise KeyError(name)
