import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcalc.errors import ArityMismatch, SignatureMismatch, UnboundFunction
from mcalc.opcalc import (
    Deriv, Func, FuncSymbol, Id, OpSum, PolyMap, SpaceLabel, chain, derivation,
    differentiate, evaluate_term, expand_composition, format_term, normalize, term, to_json_obj,
)

U, V, W = SpaceLabel("U"), SpaceLabel("V"), SpaceLabel("W")
f = FuncSymbol("f", V, W)
g = FuncSymbol("g", U, V)
Dg, D2g, D3g = Deriv(g, 1), Deriv(g, 2), Deriv(g, 3)
IU, IV = Id((U,)), Id((V,))


def fog(k):
    return Deriv(f, k, g)


def _bindings(seed, dims=(3, 2, 2)):
    rng = np.random.default_rng(seed)
    du, dv, dw = dims
    return {"f": PolyMap.random(rng, dv, dw), "g": PolyMap.random(rng, du, dv)}, rng


# --- golden expansions --------------------------------------------------------------


def test_first_order_is_chain_rule():
    assert expand_composition(f, g, 1) == OpSum((term(1, fog(1), Dg),))


def test_second_order_golden():
    expected = OpSum((term(1, fog(2), chain(Dg, Dg)), term(1, fog(1), D2g)))
    s = expand_composition(f, g, 2)
    assert s == expected
    assert format_term(s) == "(D^2f∘g)(Dg⊗Dg) + (Df∘g)D^2g"


def test_third_order_golden():
    expected = OpSum((
        term(1, fog(3), chain(Dg, Dg, Dg)),
        term(1, fog(2), chain(D2g, Dg)),
        term(2, fog(2), chain(Dg, D2g)),
        term(1, fog(1), D3g),
    ))
    s = expand_composition(f, g, 3)
    assert s == expected
    assert format_term(s) == "(D^3f∘g)(Dg⊗Dg⊗Dg) + (D^2f∘g)[(D^2g⊗Dg) + 2(Dg⊗D^2g)] + (Df∘g)D^3g"


def _bell_coefficients(k):
    """Number of set partitions of {1..k}, keyed by the sorted block sizes."""
    out = {}

    def parts(n, m):
        # partitions of n into parts <= m, as tuples
        if n == 0:
            yield ()
            return
        for p in range(min(n, m), 0, -1):
            for rest in parts(n - p, p):
                yield (p,) + rest
    for blocks in parts(k, k):
        count = math.factorial(k)
        for b in blocks:
            count //= math.factorial(b)
        for b in set(blocks):
            count //= math.factorial(blocks.count(b))
        out[blocks] = count
    return out


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_coefficients_sum_to_set_partition_counts(k):
    # Each ordered chain D^{b1}g (x) ... (x) D^{bj}g is one arrangement of a set
    # partition; summing coefficients over arrangements of the same block
    # multiset must give the number of set partitions with those block sizes.
    s = expand_composition(f, g, k)
    got = {}
    for t in s:
        blocks = tuple(sorted((a.order for a in t.factors[-1].atoms()), reverse=True))
        got[blocks] = got.get(blocks, 0) + t.coeff
    assert got == _bell_coefficients(k)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_extreme_terms_have_unit_coefficient(k):
    s = expand_composition(f, g, k)
    assert s.terms[0] == term(1, fog(k), chain(*[Dg] * k))
    assert s.terms[-1] == term(1, fog(1), Deriv(g, k))


def test_raw_third_order_step():
    raw, _ = derivation(f, g, 3)[-1]
    expected = [
        term(1, fog(3), chain(Dg, Id((V, V))), chain(IU, chain(Dg, Dg))),
        term(1, fog(2), chain(D2g, Dg)),
        term(1, fog(2), chain(Dg, D2g)),
        term(1, fog(2), chain(Dg, IV), chain(IU, D2g)),
        term(1, fog(1), D3g),
    ]
    assert list(raw.terms) == expected
    text = format_term(raw)
    assert "(D^3f∘g)(Dg⊗I)(I⊗(Dg⊗Dg))" in text
    assert "(D^2f∘g)[(D^2g⊗Dg) + (Dg⊗D^2g)]" in text
    assert "(D^2f∘g)(Dg⊗I)(I⊗D^2g)" in text


def test_mismatched_composition():
    h = FuncSymbol("h", W, U)
    with pytest.raises(SignatureMismatch):
        expand_composition(h, g, 2)


# --- differentiate / normalize --------------------------------------------------------


def test_derivative_of_single_atom():
    assert differentiate(OpSum((term(1, Dg),))) == OpSum((term(1, D2g),))


def test_identity_padding_differentiates_away():
    s = OpSum((term(1, chain(IU, Func(g))),))
    assert differentiate(s) == OpSum((term(1, chain(IU, Dg)),))


def test_fuse_simple():
    s = OpSum((term(1, chain(Dg, IV), chain(IU, Dg)),))
    assert normalize(s) == OpSum((term(1, chain(Dg, Dg)),))


def test_fuse_nested():
    s = OpSum((term(1, chain(Dg, Id((V, V))), chain(IU, chain(Dg, Dg))),))
    assert normalize(s) == OpSum((term(1, chain(Dg, Dg, Dg)),))


def test_tensor_order_is_kept():
    s = OpSum((term(1, chain(D2g, Dg)), term(1, chain(Dg, D2g)), term(1, chain(Dg, D2g))))
    n = normalize(s)
    assert n == OpSum((term(1, chain(D2g, Dg)), term(2, chain(Dg, D2g))))


def test_cancellation_drops_terms():
    assert normalize(OpSum((term(1, Dg), term(-1, Dg)))) == OpSum(())


def test_pure_identity_term_keeps_one_factor():
    s = normalize(OpSum((term(1, IU, IU),)))
    assert format_term(s) == "I"


def test_normalize_idempotent():
    for k in range(1, 5):
        for raw, _ in derivation(f, g, k):
            n = normalize(raw)
            assert normalize(n) == n


def test_signature_checked_on_construction():
    with pytest.raises(SignatureMismatch):
        term(1, fog(1), chain(Dg, Dg))
    with pytest.raises(SignatureMismatch):
        Deriv(f, 1, FuncSymbol("h", U, W))


# --- evaluation --------------------------------------------------------------------------


def test_polymap_derivative_matches_fd():
    p = PolyMap.random(np.random.default_rng(1), 3, 2)
    x, z = np.random.default_rng(2).standard_normal((2, 3))
    h = 1e-6
    fd = (p(x + h * z) - p(x - h * z)) / (2 * h)
    np.testing.assert_allclose(p.derivative(x, [z]), fd, rtol=1e-7)
    assert p.derivative(x, [z] * 4).tolist() == [0.0, 0.0]


def test_first_order_against_fd():
    b, rng = _bindings(3)
    x, z = rng.standard_normal((2, 3))
    est = evaluate_term(expand_composition(f, g, 1), b, x, [z])
    comp = lambda y: b["f"](b["g"](y))
    h = np.finfo(float).eps ** (1 / 3) * (1 + np.linalg.norm(x))
    ref = (comp(x + h * z) - comp(x - h * z)) / (2 * h)
    assert np.linalg.norm(est - ref) <= 1e-6 * np.linalg.norm(ref)


def test_second_order_symmetric():
    b, rng = _bindings(4)
    x, z1, z2 = rng.standard_normal((3, 3))
    s = expand_composition(f, g, 2)
    a = evaluate_term(s, b, x, [z1, z2])
    c = evaluate_term(s, b, x, [z2, z1])
    assert np.linalg.norm(a - c) <= 1e-8 * np.linalg.norm(a)


def test_third_order_terms_only_agree_after_symmetrizing():
    # chains record the order in which directions entered, so single terms
    # are not symmetric; only the symmetrized sum equals the derivative
    from mcalc.numcheck import composition_derivative

    b, rng = _bindings(6)
    x = rng.standard_normal(3)
    dirs = list(rng.standard_normal((3, 3)))
    s = expand_composition(f, g, 3)
    ref = composition_derivative(b["f"], b["g"], x, dirs)
    sym = evaluate_term(s, b, x, dirs, symmetrize=True)
    raw = evaluate_term(s, b, x, dirs)
    assert np.linalg.norm(sym - ref) <= 1e-10 * np.linalg.norm(ref)
    assert np.linalg.norm(raw - ref) > 1e-6 * np.linalg.norm(ref)


def test_zero_sum_is_zero_vector():
    assert evaluate_term(OpSum(()), {}, np.zeros(3), [], out_dim=2).tolist() == [0.0, 0.0]


def test_arity_and_binding_errors():
    b, rng = _bindings(5)
    s = expand_composition(f, g, 2)
    with pytest.raises(ArityMismatch):
        evaluate_term(s, b, np.zeros(3), [np.ones(3)])
    with pytest.raises(UnboundFunction):
        evaluate_term(s, {"f": b["f"]}, np.zeros(3), [np.ones(3)] * 2)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), k=st.integers(1, 4))
def test_normalization_preserves_value(seed, k):
    b, rng = _bindings(seed, (2, 3, 2))
    x = rng.standard_normal(2)
    dirs = list(rng.standard_normal((k, 2)))
    for m, (raw, n) in enumerate(derivation(f, g, k), 1):
        a = evaluate_term(raw, b, x, dirs[:m])
        c = evaluate_term(n, b, x, dirs[:m])
        assert np.linalg.norm(a - c) <= 1e-10 * np.linalg.norm(a)


def test_json_shape():
    obj = to_json_obj(expand_composition(f, g, 2))
    assert [t["coeff"] for t in obj["terms"]] == [1, 1]
    assert obj["terms"][0]["factors"][1] == [
        {"atom": "Deriv", "func": "g", "order": 1, "composed": None},
        {"atom": "Deriv", "func": "g", "order": 1, "composed": None},
    ]


def test_ascii_and_latex_styles():
    s = expand_composition(f, g, 2)
    assert format_term(s, "ascii") == "(D^2f . g)(Dg (x) Dg) + (Df . g)D^2g"
    assert format_term(s, "latex") == r"(D^{2}f \circ g)\,(Dg \otimes Dg) + (Df \circ g)\,D^{2}g"
