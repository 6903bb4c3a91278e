from fractions import Fraction

from hypothesis import given, strategies as st

from gapdense.polynomial import Polynomial
from gapdense.scalars import PrecisionContext

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=30)
polys = st.lists(rationals, min_size=1, max_size=6).map(Polynomial)


def test_degree_and_zero():
    assert Polynomial([0]).degree == -1
    assert Polynomial([1, 2, 0, 0]).degree == 1
    assert Polynomial.monomial(3).coeffs == (0, 0, 0, 1)


def test_derivative_at_zero_uses_factorials():
    p = Polynomial([1, 2, 3, 4])
    assert [p.derivative_at_zero(j) for j in range(4)] == [1, 2, 6, 24]


def test_mixed_exact_and_float_coefficients():
    mp = PrecisionContext(128).mp
    p = Polynomial([1, mp.mpf(2)])
    assert p(mp.mpf(3)) == 7
    assert Polynomial([Fraction(1, 2)]).shift(2).coeffs == (0, 0, Fraction(1, 2))


@given(polys, polys, rationals)
def test_ring_laws_evaluate_exactly(p, q, x):
    assert (p + q)(x) == p(x) + q(x)
    assert (p * q)(x) == p(x) * q(x)
    assert (p - q)(x) == p(x) - q(x)


@given(polys)
def test_derivative_lowers_degree(p):
    d = p.derivative()
    assert d.degree == (p.degree - 1 if p.degree >= 1 else -1)
