from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cancelling.catalog import catalog_get
from cancelling.symbols import (
    PolyMatrix,
    Polynomial,
    SymbolError,
    SymbolOperator,
    as_rational,
    cofactor_det,
    eval_symbol,
    multiindices,
    poly_adjugate,
    poly_det,
    poly_det_adjugate,
    symbol_gram,
)

from conftest import CATALOG_CASES, case_id

small_rationals = st.fractions(min_value=-3, max_value=3, max_denominator=5)


def polynomials(n, degree):
    monos = multiindices(n, degree)
    return st.lists(small_rationals, min_size=len(monos), max_size=len(monos)).map(
        lambda cs: Polynomial(n, dict(zip(monos, cs)))
    )


def polymatrices(n, rows, cols, degree):
    return st.lists(polynomials(n, degree), min_size=rows * cols, max_size=rows * cols).map(
        lambda ps: PolyMatrix([ps[i * cols:(i + 1) * cols] for i in range(rows)], n=n)
    )


def xi_of(n):
    return st.lists(small_rationals, min_size=n, max_size=n)


# -- multiindices and polynomials ---------------------------------------------------------------

@pytest.mark.parametrize("n,k", [(1, 3), (2, 2), (3, 1), (3, 4), (4, 2)])
def test_multiindices_count_order_and_sorting(n, k):
    alphas = multiindices(n, k)
    assert len(alphas) == comb(n + k - 1, k)
    assert all(sum(a) == k and len(a) == n for a in alphas)
    assert alphas == sorted(alphas)
    assert len(set(alphas)) == len(alphas)


def test_as_rational_rejects_floats_and_keeps_ints():
    assert as_rational("3/6") == Fraction(1, 2)
    assert as_rational(Fraction(4, 2)) == 2 and type(as_rational(Fraction(4, 2))) is int
    with pytest.raises(SymbolError):
        as_rational(0.5)
    with pytest.raises(SymbolError):
        as_rational(True)
    with pytest.raises(SymbolError):
        as_rational("1/0")


def test_polynomial_never_stores_zero_terms():
    x = Polynomial.variable(2, 0)
    y = Polynomial.variable(2, 1)
    p = x * y + x - x
    assert p.terms == {(1, 1): 1}
    assert (p - p).is_zero()
    assert Polynomial(2, {(1, 0): 0}).terms == {}


@given(polynomials(2, 2), polynomials(2, 1), xi_of(2))
def test_polynomial_arithmetic_is_exact_under_evaluation(p, q, xi):
    assert (p * q)(xi) == p(xi) * q(xi)
    assert (p + q)(xi) == p(xi) + q(xi)
    assert (p - q)(xi) == p(xi) - q(xi)


@given(polymatrices(2, 2, 3, 1), polymatrices(2, 3, 2, 2), xi_of(2))
def test_polymatrix_evaluation_commutes_with_products(a, b, xi):
    lhs = (a @ b).evaluate(xi)
    rhs = np.array(a.evaluate(xi), dtype=object).dot(np.array(b.evaluate(xi), dtype=object))
    assert (lhs == rhs).all()


# -- operators ---------------------------------------------------------------------------------

def test_operator_rejects_inhomogeneous_and_zero_coefficients():
    with pytest.raises(SymbolError):
        SymbolOperator(2, 1, 1, 1, {(1, 1): ((1,),)})
    with pytest.raises(SymbolError):
        SymbolOperator(2, 1, 1, 1, {(1, 0): ((0,),)})
    with pytest.raises(SymbolError):
        SymbolOperator(0, 1, 1, 1, {(): ((1,),)})
    with pytest.raises(SymbolError):
        SymbolOperator.from_entries(2, 1, 1, 1, [((1, 0), 1, 0, 1)])


def test_eval_symbol_rejects_wrong_length():
    with pytest.raises(SymbolError):
        eval_symbol(catalog_get("gradient", n=3), [1, 0])


def test_divcurl_symbol_is_dot_and_cross_product():
    a = eval_symbol(catalog_get("divcurl"), [1, 0, 0])
    v = np.array([0, 1, 0], dtype=object)
    assert list(a.dot(v)) == [0, 0, 0, 1]


def test_symmetric_derivative_symbol_in_two_dimensions():
    a = eval_symbol(catalog_get("symder", n=2), [1, 0])
    out = a.dot(np.array([0, 1], dtype=object)).reshape(2, 2)
    half = Fraction(1, 2)
    assert out.tolist() == [[0, half], [half, 0]]


@pytest.mark.parametrize("case", CATALOG_CASES, ids=case_id)
def test_symbol_at_origin_is_zero(case):
    op = catalog_get(case[0], **case[1])
    assert not eval_symbol(op, [0] * op.n).any()
    assert not np.any(eval_symbol(op, np.zeros(op.n)))


@pytest.mark.parametrize("case", CATALOG_CASES, ids=case_id)
@given(t=small_rationals, data=st.data())
def test_symbol_is_homogeneous_of_order_k(case, t, data):
    op = catalog_get(case[0], **case[1])
    xi = data.draw(xi_of(op.n))
    scaled = eval_symbol(op, [t * x for x in xi])
    assert (scaled == eval_symbol(op, xi) * t ** op.k).all()


@pytest.mark.parametrize("case", CATALOG_CASES, ids=case_id)
def test_float_and_exact_evaluation_agree(case):
    op = catalog_get(case[0], **case[1])
    rng = np.random.default_rng(1)
    for _ in range(5):
        q = [Fraction(int(c), 7) for c in rng.integers(-9, 10, op.n)]
        exact = eval_symbol(op, q).astype(float)
        assert np.allclose(op.numeric(np.array(q, dtype=float)), exact, atol=1e-14)


# -- gram, determinant, adjugate -------------------------------------------------------------------

def _norm2(n):
    return sum((Polynomial.variable(n, i) * Polynomial.variable(n, i) for i in range(n)), Polynomial.zero(n))


def test_gradient_gram_is_squared_length():
    for n in (1, 2, 3):
        assert symbol_gram(catalog_get("gradient", n=n)) == PolyMatrix([[_norm2(n)]], n=n)


def test_divcurl_gram_is_lagrange_identity():
    assert symbol_gram(catalog_get("divcurl")) == PolyMatrix.identity(3, 3, _norm2(3))


def test_symmetric_derivative_gram():
    x = [Polynomial.variable(2, i) for i in range(2)]
    half = Polynomial.constant(2, Fraction(1, 2))
    want = PolyMatrix(
        [[half * ((_norm2(2) if i == j else Polynomial.zero(2)) + x[i] * x[j]) for j in range(2)]
         for i in range(2)],
        n=2,
    )
    assert symbol_gram(catalog_get("symder", n=2)) == want


def test_determinant_and_adjugate_small_cases():
    p = _norm2(2) + Polynomial.variable(2, 0)
    det, adj = poly_det_adjugate(PolyMatrix([[p]], n=2))
    assert det == p and adj == PolyMatrix.identity(2, 1)
    m = PolyMatrix.identity(3, 3, _norm2(3))
    assert poly_det(m) == _norm2(3) * _norm2(3) * _norm2(3)
    assert poly_adjugate(m) == PolyMatrix.identity(3, 3, _norm2(3) * _norm2(3))


def test_determinant_rejects_non_square():
    with pytest.raises(SymbolError):
        poly_det(PolyMatrix.zeros(2, 2, 3))


@given(polymatrices(2, 3, 3, 1))
def test_adjugate_identity_against_cofactor_expansion(m):
    det, adj = poly_det_adjugate(m)
    assert det == cofactor_det(m)
    assert m @ adj == PolyMatrix.identity(2, 3, det)
    assert adj @ m == PolyMatrix.identity(2, 3, det)


@pytest.mark.parametrize("case", CATALOG_CASES, ids=case_id)
def test_gram_adjugate_identity_for_catalog(case):
    gram = symbol_gram(catalog_get(case[0], **case[1]))
    det, adj = poly_det_adjugate(gram)
    assert gram @ adj == PolyMatrix.identity(gram.n, gram.rows, det)
    for row in gram.entries:
        for p in row:
            assert p.is_zero() or p.degrees() == {2 * catalog_get(case[0], **case[1]).k}
