import numpy as np
import pytest

from mcalc import frechet
from mcalc.errors import NotReducible
from mcalc.expr import (
    Dir, MatMul, Shape, Trace, Transpose, evaluate, format_expr, parse, random_env,
    simplify, symbol_table, with_directions,
)
from mcalc.expr import canonical
from mcalc.numcheck import fd_directional, fd_second

RAYLEIGH = symbol_table(["X:3x2:var", "A:3x3:const", "B:3x2:const"])
SQUARE = symbol_table(["X:4x4:var", "A:4x4:const"])


def _env(table, wrt, seed, square="well_conditioned"):
    return random_env(with_directions(table, wrt, 2), seed, square=square, unit_directions=True)


def _rel(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b)


# --- golden forms ----------------------------------------------------------------


def test_rayleigh_first_derivative_raw():
    e = parse("tr(X'*A*X)", RAYLEIGH)
    assert format_expr(frechet.d(e, "X").expr) == "tr(Z'*A*X) + tr(X'*A*Z)"


def test_rayleigh_first_derivative_merged():
    e = parse("tr(X'*A*X)", RAYLEIGH)
    assert format_expr(simplify(frechet.d(e, "X").expr)) == "tr(Z'*(A + A')*X)"


def test_rayleigh_gradient_and_hessian():
    e = parse("tr(X'*A*X)", RAYLEIGH)
    assert format_expr(frechet.gradient(e, "X")) == "(A + A')*X"
    assert format_expr(frechet.hessian(e, "X").expr) == "(A + A')*T"


def test_second_directional_of_rayleigh():
    e = parse("tr(X'*A*X)", RAYLEIGH)
    assert format_expr(simplify(frechet.directional(e, "X", 2).expr)) == "tr(Z'*(A + A')*T)"


def test_identity_map():
    e = parse("X", RAYLEIGH)
    assert format_expr(frechet.d(e, "X").expr) == "Z"


def test_linear_functional():
    e = parse("tr(B'*X)", RAYLEIGH)
    assert format_expr(frechet.gradient(e, "X")) == "B"
    assert format_expr(frechet.hessian(e, "X").expr) == "0"


def test_logdet_forms():
    e = parse("logdet(X)", SQUARE)
    assert format_expr(simplify(frechet.d(e, "X").expr)) == "tr(Z*inv(X))"
    assert format_expr(frechet.gradient(e, "X")) == "inv(X)'"
    assert format_expr(frechet.hessian(e, "X").expr) == "-(inv(X)'*T'*inv(X)')"
    assert format_expr(simplify(frechet.directional(e, "X", 2).expr)) == "-tr(Z*inv(X)*T*inv(X))"


def test_inverse_derivative_form():
    e = parse("inv(X)", SQUARE)
    assert format_expr(frechet.d(e, "X").expr) == "-(inv(X)*Z*inv(X))"


def test_constant_has_zero_derivative():
    e = parse("tr(A)", SQUARE)
    assert format_expr(simplify(frechet.d(e, "X", shape=Shape(4, 4)).expr)) == "0"
    with pytest.raises(ValueError):
        frechet.d(e, "X")


# --- numeric oracles ---------------------------------------------------------------


def test_inverse_derivative_matches_fd():
    e = parse("inv(X)", SQUARE)
    dz = frechet.d(e, "X").expr
    for seed in range(10):
        env = _env(SQUARE, "X", seed)
        fn = lambda y: evaluate(e, env.bind(X=y))
        assert _rel(evaluate(dz, env), fd_directional(fn, env["X"], env["Z"])) < 1e-7


def test_logdet_gradient_matches_entrywise_fd():
    e = parse("logdet(X)", SQUARE)
    g = frechet.gradient(e, "X")
    for seed in range(5):
        env = _env(SQUARE, "X", seed, square="spd")
        fn = lambda y: evaluate(e, env.bind(X=y))
        fd = np.zeros((4, 4))
        for i in range(4):
            for j in range(4):
                unit = np.zeros((4, 4))
                unit[i, j] = 1.0
                fd[i, j] = fd_directional(fn, env["X"], unit)
        assert _rel(evaluate(g, env), fd) < 1e-7


def test_logdet_hessian_matches_nested_fd():
    e = parse("logdet(X)", SQUARE)
    h = frechet.hessian(e, "X")
    for seed in range(10):
        env = _env(SQUARE, "X", seed, square="spd")
        fn = lambda y: evaluate(e, env.bind(X=y))
        ref = fd_second(fn, env["X"], env["Z"], env["T"])
        est = h.bilinear(env, env["Z"], env["T"])
        assert abs(est - ref) <= 1e-5 * max(abs(ref), 1e-3)


@pytest.mark.parametrize("text", ["tr(X'*A*X)", "tr(A*inv(X))", "logdet(X'*X + I(4))", "tr(X*X*X)"])
def test_linearity_in_direction(text):
    e = parse(text, SQUARE)
    dz = frechet.d(e, "X").expr
    env = _env(SQUARE, "X", 11)
    rng = np.random.default_rng(0)
    z1, z2 = rng.standard_normal((2, 4, 4))
    a, b = 0.7, -1.3
    lhs = evaluate(dz, env.bind(Z=a * z1 + b * z2))
    rhs = a * evaluate(dz, env.bind(Z=z1)) + b * evaluate(dz, env.bind(Z=z2))
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))


def test_gradient_consistency_symbolic():
    e = parse("tr(X)*tr(X'*A*X)", SQUARE)
    g = frechet.gradient(e, "X")
    z = Dir("Z", Shape(4, 4), 1)
    assert canonical.equivalent(Trace(MatMul(Transpose(z), g)), frechet.d(e, "X").expr)


def test_hessian_is_symmetric():
    e = parse("tr(A*inv(X))", SQUARE)
    h = frechet.hessian(e, "X")
    for seed in range(20):
        env = _env(SQUARE, "X", seed)
        bzt = h.bilinear(env, env["Z"], env["T"])
        btz = h.bilinear(env, env["T"], env["Z"])
        assert abs(bzt - btz) <= 1e-8 * (1 + abs(bzt))


# --- errors and bookkeeping -----------------------------------------------------------


def test_direction_already_used():
    e = frechet.d(parse("tr(X'*A*X)", RAYLEIGH), "X").expr
    with pytest.raises(ValueError):
        frechet.d(e, "X", 1)


def test_wrt_must_be_variable():
    with pytest.raises(ValueError):
        frechet.d(parse("tr(A)", SQUARE), "A")


def test_gradient_of_matrix_rejected():
    with pytest.raises(TypeError):
        frechet.gradient(parse("X", SQUARE), "X")


def test_read_off_rejects_quadratic_forms():
    d = symbol_table(["X:3x3:var", "Z:3x3:dir"])
    with pytest.raises(NotReducible):
        canonical.read_linear(canonical.normal_form(parse("tr(Z'*Z*X)", d)), 1, Shape(3, 3))
    with pytest.raises(NotReducible):
        canonical.read_linear(canonical.normal_form(parse("logdet(Z + I(3))", d)), 1, Shape(3, 3))


def test_directional_result_metadata():
    dd = frechet.directional(parse("tr(X*X*X)", SQUARE), "X", 3)
    assert dd.direction_index == 3 and dd.direction == "Z3" and dd.wrt == "X"
