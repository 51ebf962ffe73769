"""Concrete matrix/scalar expressions: AST, parsing, printing, simplification, evaluation."""

from mcalc.expr.ast import (
    SCALAR, Add, Const, Dir, Expr, Identity, Inverse, Lit, LogDet, MatExpr,
    MatMul, Neg, SAdd, ScalarExpr, ScalarMul, Shape, SMul, SNeg, Trace,
    Transpose, Var, Zero, direction_index, direction_name, directions,
    free_symbols, infer_shape,
)
from mcalc.expr.decls import (
    Decl, DeclarationError, Env, parse_decl, random_env, spd, symbol_table,
    well_conditioned, with_directions,
)
from mcalc.expr.evaluate import evaluate
from mcalc.expr.parser import parse
from mcalc.expr.printer import (
    format_expr, format_latex, from_json, from_json_obj, to_json, to_json_obj,
)
from mcalc.expr.canonical import equivalent, normal_form, simplify

__all__ = [
    "SCALAR", "Add", "Const", "Decl", "DeclarationError", "Dir", "Env", "Expr",
    "Identity", "Inverse", "Lit", "LogDet", "MatExpr", "MatMul", "Neg", "SAdd",
    "ScalarExpr", "ScalarMul", "Shape", "SMul", "SNeg", "Trace", "Transpose",
    "Var", "Zero", "direction_index", "direction_name", "directions",
    "equivalent", "evaluate", "format_expr", "format_latex", "free_symbols",
    "from_json", "from_json_obj", "infer_shape", "normal_form", "parse",
    "parse_decl", "random_env", "simplify", "spd", "symbol_table", "to_json",
    "to_json_obj", "well_conditioned", "with_directions",
]
