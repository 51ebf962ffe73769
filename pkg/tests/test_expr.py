import json
import math
from fractions import Fraction

import numpy as np
import pytest

from mcalc.errors import (
    ExprSyntaxError, NonPositiveDeterminant, NonSquare, ShapeMismatch, SingularMatrix,
    UnboundSymbol, UnknownSymbol,
)
from mcalc.expr import (
    SCALAR, Add, Const, DeclarationError, Env, Identity, Inverse, Lit, LogDet, MatMul,
    Neg, Shape, Trace, Transpose, Var, Zero, equivalent, evaluate, format_expr, format_latex,
    from_json, infer_shape, parse, parse_decl, random_env, simplify, symbol_table, to_json,
    to_json_obj,
)

X32 = Var("X", Shape(3, 2))
A33 = Const("A", Shape(3, 3))
DECLS = symbol_table(["X:3x2:var", "A:3x3:const", "B:3x2:const", "P:3x3:const", "Q:3x3:const"])


# --- shapes -----------------------------------------------------------------------


def test_shape_invariants():
    assert Shape(3, 3).square and not Shape(3, 2).square
    assert Shape(3, 2).T == Shape(2, 3)
    with pytest.raises(ValueError):
        Shape(0, 2)


def test_matmul_shape():
    assert infer_shape(MatMul(A33, X32)) == Shape(3, 2)


def test_rayleigh_is_scalar():
    e = Trace(MatMul(Transpose(X32), MatMul(A33, X32)))
    assert infer_shape(e) is SCALAR


def test_inner_dimension_mismatch():
    with pytest.raises(ShapeMismatch) as err:
        MatMul(A33, Var("X", Shape(2, 2)))
    assert err.value.expected is not None and err.value.found is not None


@pytest.mark.parametrize("build", [
    lambda: Trace(X32),
    lambda: LogDet(X32),
    lambda: Inverse(X32),
])
def test_square_only_nodes(build):
    with pytest.raises(NonSquare):
        build()


def test_add_requires_equal_shapes():
    with pytest.raises(ShapeMismatch):
        Add((X32, A33))


def test_lit_rejects_floats():
    with pytest.raises(TypeError):
        Lit(0.5)


# --- declarations ------------------------------------------------------------------


def test_parse_decl():
    d = parse_decl("X:3x2:var")
    assert (d.name, d.shape, d.role) == ("X", Shape(3, 2), "var")


@pytest.mark.parametrize("text", ["X:3:var", "X:3x2:param", "tr:3x3:const", "W:3x3:dir"])
def test_bad_decls(text):
    with pytest.raises(DeclarationError):
        parse_decl(text)


def test_conflicting_redeclaration():
    with pytest.raises(DeclarationError):
        symbol_table(["X:3x2:var", "X:3x3:var"])
    assert len(symbol_table(["X:3x2:var", "X:3x2:var"])) == 1


# --- parser -----------------------------------------------------------------------


def test_parse_rayleigh():
    e = parse("tr(X' * A * X)", DECLS)
    assert e == Trace(MatMul(Transpose(X32), MatMul(A33, X32)))


def test_parse_logdet_inv():
    d = symbol_table(["X:3x3:var"])
    x = Var("X", Shape(3, 3))
    assert parse("logdet(inv(X))", d) == LogDet(Inverse(x))


def test_unclosed_paren():
    with pytest.raises(ExprSyntaxError) as err:
        parse("tr(X + A", symbol_table(["X:3x3:var", "A:3x3:const"]))
    assert err.value.line == 1 and err.value.col == 9


def test_syntax_error_position_on_second_line():
    with pytest.raises(ExprSyntaxError) as err:
        parse("tr(A)\n + * A", DECLS)
    assert err.value.line == 2 and err.value.col == 4


def test_unknown_symbol():
    with pytest.raises(UnknownSymbol):
        parse("tr(Y)", DECLS)


def test_parse_shape_error():
    with pytest.raises(ShapeMismatch):
        parse("A * X'", DECLS)


def test_rationals_and_negation():
    e = parse("-3/4*tr(A) + 1/2", DECLS)
    env = Env({"A": np.eye(3)})
    assert evaluate(e, env) == pytest.approx(-3 / 4 * 3 + 0.5)


def test_subtraction_and_unary_minus_evaluate():
    e = parse("A - -P*Q", DECLS)
    env = random_env(DECLS, 0)
    np.testing.assert_allclose(evaluate(e, env), env["A"] + env["P"] @ env["Q"])


def test_postfix_transpose_on_groups():
    e = parse("(A*P)'", DECLS)
    env = random_env(DECLS, 1)
    np.testing.assert_allclose(evaluate(e, env), (env["A"] @ env["P"]).T)


def test_identity_literal():
    e = parse("tr(I(3))", DECLS)
    assert evaluate(e, Env()) == 3.0


# --- evaluation -------------------------------------------------------------------


def test_logdet_of_2i():
    x = Var("X", Shape(2, 2))
    assert evaluate(LogDet(x), Env({"X": 2 * np.eye(2)})) == pytest.approx(2 * math.log(2), abs=1e-10)


def test_rayleigh_matches_triple_sum():
    rng = np.random.default_rng(3)
    a, x = rng.standard_normal((3, 3)), rng.standard_normal((3, 2))
    e = parse("tr(X'*A*X)", DECLS)
    ref = sum(x[j, i] * a[j, k] * x[k, i] for i in range(2) for j in range(3) for k in range(3))
    assert evaluate(e, Env({"X": x, "A": a})) == pytest.approx(ref, rel=1e-12)


def test_singular_inverse():
    x = Var("X", Shape(2, 2))
    with pytest.raises(SingularMatrix):
        evaluate(Inverse(x), Env({"X": np.array([[1.0, 2.0], [2.0, 4.0]])}))


def test_nonpositive_determinant():
    x = Var("X", Shape(2, 2))
    with pytest.raises(NonPositiveDeterminant):
        evaluate(LogDet(x), Env({"X": np.diag([1.0, -1.0])}))


def test_unbound_symbol():
    with pytest.raises(UnboundSymbol):
        evaluate(X32, Env())


def test_env_shape_check():
    with pytest.raises(ShapeMismatch):
        Env({"X": np.zeros((2, 2))}).check(DECLS)


def test_random_env_is_seeded():
    a, b = random_env(DECLS, 5), random_env(DECLS, 5)
    assert all(np.array_equal(a[k], b[k]) for k in DECLS)


# --- simplification ------------------------------------------------------------------


def test_merges_two_traces():
    d = symbol_table(["X:3x2:var", "A:3x3:const", "Z:3x2:dir"])
    e = parse("tr(Z'*A*X) + tr(X'*A*Z)", d)
    assert format_expr(simplify(e)) == "tr(Z'*(A + A')*X)"


def test_identity_absorbed():
    d = symbol_table(["X:3x3:var"])
    assert simplify(parse("I(3)*X", d)) == Var("X", Shape(3, 3))


def test_trace_cyclic_canonical():
    a, b = parse("tr(P*Q)", DECLS), parse("tr(Q*P)", DECLS)
    assert simplify(a) == simplify(b)
    assert equivalent(parse("tr(P*Q*A)", DECLS), parse("tr(A'*Q'*P')", DECLS))


def test_transpose_rules():
    assert simplify(parse("(A*P)'", DECLS)) == simplify(parse("P'*A'", DECLS))
    assert simplify(parse("A''", DECLS)) == A33


def test_inverse_cancels():
    d = symbol_table(["X:3x3:var"])
    assert format_expr(simplify(parse("inv(X)*X", d))) == "I(3)"
    assert format_expr(simplify(parse("logdet(inv(X))", d))) == "-logdet(X)"


def test_like_terms_cancel_to_zero():
    e = simplify(parse("A - A", DECLS))
    assert isinstance(e, Zero) and e.shape == Shape(3, 3)
    assert simplify(parse("tr(A) - tr(A')", DECLS)) == Lit(Fraction(0))


def test_simplify_is_idempotent():
    e = simplify(parse("tr(X'*A*X) + 2*tr(B'*X) - tr(X'*A'*X)", DECLS))
    assert simplify(e) == e


# --- printing ---------------------------------------------------------------------


def test_format_round_trip_simple():
    for text in ["tr(X'*A*X)", "-tr(A)", "2*A*P - Q'", "logdet(inv(P)*Q)", "(A + P)*(Q - A)"]:
        e = parse(text, DECLS)
        assert parse(format_expr(e), DECLS) == e


def test_latex():
    e = parse("tr(X'*A*X)", DECLS)
    assert format_latex(e) == r"\operatorname{tr}\left\{X^{\top} A X\right\}"


def test_json_round_trip_and_key_order():
    e = parse("tr(X'*A*X) + 1/3", DECLS)
    obj = to_json_obj(e)
    assert list(obj) == ["op", "shape", "children"]
    assert from_json(to_json(e)) == e


def test_json_rejects_wrong_shape():
    obj = to_json_obj(Transpose(X32))
    obj["shape"] = [3, 2]
    with pytest.raises(ValueError):
        from_json(json.dumps(obj))


def test_zero_and_neg_nodes():
    assert format_expr(Neg(MatMul(A33, X32))) == "-(A*X)"
    assert from_json(to_json(Zero(Shape(2, 3)))) == Zero(Shape(2, 3))
    assert format_expr(Identity(2)) == "I(2)"
