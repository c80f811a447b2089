from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corforge.errors import NonTerminatingSeries
from corforge.linop import build_osc_operators
from corforge.models import fring_tenney_closed_form, fring_tenney_symbolic_factors
from corforge.weyl import (
    I,
    ONE,
    P,
    X,
    GaussRational,
    ScalarExpr,
    SymbolicFactor,
    WeylPolynomial,
    adjoint_conjugate,
    commutator,
    composite_coriolis_symbolic,
    coriolis_direct_symbolic,
    format_operator,
    normal_order,
)


def rewrite_oracle(word: str) -> dict:
    """Normal-order a word in 'x'/'p' by repeatedly replacing ``px -> xp - i``.

    Returns ``{(a, b): complex}``. Deliberately naive: no closed-form counting.
    """
    pending = {word: 1 + 0j}
    done: dict = {}
    while pending:
        w, c = pending.popitem()
        k = w.find("px")
        if k < 0:
            key = (w.count("x"), w.count("p"))
            done[key] = done.get(key, 0) + c
            continue
        for nxt, factor in ((w[:k] + "xp" + w[k + 2 :], 1), (w[:k] + w[k + 2 :], -1j)):
            pending[nxt] = pending.get(nxt, 0) + c * factor
    return {k: v for k, v in done.items() if v != 0}


def as_complex_dict(poly: WeylPolynomial) -> dict:
    return {k: v.evaluate({}) for k, v in poly.terms.items()}


exps = st.integers(min_value=0, max_value=3)


@settings(max_examples=60, deadline=None)
@given(exps, exps, exps, exps)
def test_normal_order_matches_rewriting(a, b, c, d):
    got = as_complex_dict(normal_order(WeylPolynomial.monomial(a, b), WeylPolynomial.monomial(c, d)))
    want = rewrite_oracle("x" * a + "p" * b + "x" * c + "p" * d)
    assert got.keys() == want.keys()
    for k in want:
        assert got[k] == pytest.approx(want[k], abs=0)


def test_canonical_commutator():
    assert commutator(X, P) == WeylPolynomial.const(I)
    assert commutator(P, X) == WeylPolynomial.const(-I)


def test_p_times_x():
    # p x = x p - i
    assert normal_order(P, X) == WeylPolynomial({(1, 1): ONE, (0, 0): -I})


small = st.builds(
    lambda terms: WeylPolynomial({(a, b): GaussRational.of(Fraction(n, 3)) for a, b, n in terms}),
    st.lists(st.tuples(exps, exps, st.integers(-4, 4)), min_size=1, max_size=3),
)


@settings(max_examples=40, deadline=None)
@given(small, small, small)
def test_product_is_associative(A, B, C):
    assert normal_order(normal_order(A, B), C) == normal_order(A, normal_order(B, C))


@settings(max_examples=30, deadline=None)
@given(small, small, small)
def test_jacobi_identity(A, B, C):
    total = commutator(A, commutator(B, C)) + commutator(B, commutator(C, A)) + commutator(C, commutator(A, B))
    assert total.is_zero()


def test_adjoint_conjugate_shift():
    alpha = ScalarExpr.symbol("alpha")
    # e^{alpha x} p e^{-alpha x} = p + i alpha
    got = adjoint_conjugate(X.scale(alpha), P)
    assert got == P + WeylPolynomial.const(I * alpha)


def test_adjoint_conjugate_cubic_terminates():
    beta = ScalarExpr.symbol("beta")
    got = adjoint_conjugate(normal_order(normal_order(P, P), P).scale(beta), X)
    # [beta p^3, x] = -3 i beta p^2 and the series stops there
    assert got == X + normal_order(P, P).scale(-3 * I * beta)


def test_adjoint_conjugate_nonterminating():
    with pytest.raises(NonTerminatingSeries):
        adjoint_conjugate(normal_order(X, P), X, max_depth=12)


def test_symbolic_factor_rejects_mixed_generator():
    with pytest.raises(ValueError):
        SymbolicFactor("a", normal_order(X, P))
    with pytest.raises(ValueError):
        SymbolicFactor("a", X + P)


def test_flagship_closed_form():
    sigma = composite_coriolis_symbolic(fring_tenney_symbolic_factors())[-1]
    assert sigma == fring_tenney_closed_form()
    assert format_operator(sigma) == (
        "i*ad(alpha)*x + i*ad(beta)*p^3 - (3*ad(alpha)*beta+ad(gamma))*p^2"
        " - (2*i*ad(alpha)*gamma+ad(delta))*p - i*ad(alpha)*delta"
    )


generators = st.sampled_from(
    [X, P, normal_order(X, X), normal_order(P, P).scale(I), normal_order(normal_order(P, P), P), P.scale(I)]
)


@settings(max_examples=25, deadline=None)
@given(st.lists(generators, min_size=1, max_size=4))
def test_recursion_matches_product_rule(gens):
    factors = [SymbolicFactor(f"c{k}", g) for k, g in enumerate(gens)]
    assert composite_coriolis_symbolic(factors)[-1] == coriolis_direct_symbolic(factors)


def test_truncation_commutator_artifact():
    d = 10
    Xm, Pm = build_osc_operators(d)
    expected = 1j * np.eye(d)
    expected[-1, -1] = 1j * (1 - d)
    assert np.allclose(Xm @ Pm - Pm @ Xm, expected, atol=1e-12)


def test_to_matrix_evaluates_coefficients():
    Xm, Pm = build_osc_operators(6)
    poly = normal_order(X, P).scale(ScalarExpr.symbol("a", dot=True)) + WeylPolynomial.const(ScalarExpr.symbol("b"))
    got = poly.to_matrix(Xm, Pm, {"ad(a)": 2.0, "b": -1.0})
    assert np.allclose(got, 2.0 * Xm @ Pm - np.eye(6))
