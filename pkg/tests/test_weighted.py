from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from gapdense.errors import AtomAtZeroOfT, PreconditionError
from gapdense.measures import Atom, uniform
from gapdense.polynomial import Polynomial
from gapdense.scalars import PrecisionContext
from gapdense.weighted import (
    TFactor,
    build_weighted_system,
    counterexample_demo,
    expand_in_q,
    isometry_residual,
    q_gram_defect,
    t_family,
    t_over_tk,
)

import oracles

CTX = PrecisionContext(256)
WIDE = PrecisionContext.for_degree(43)
U01 = uniform(0, 1)
F = Fraction


def close(a, b, tol):
    return abs(a - b) <= tol * max(1, abs(b))


def test_t_family_examples():
    assert t_family(TFactor(1, 2), 1) == TFactor(1, 1)
    assert t_family(TFactor(3, 1, (2, 3)), 2) == TFactor(1, 0, (3,))
    assert t_family(TFactor(1, 0, (2,)), 1) == TFactor(1, 0)
    with pytest.raises(PreconditionError):
        t_family(TFactor(1, 1), 2)


def test_t_over_tk_examples():
    assert t_over_tk(TFactor(1, 2), 2) == Polynomial.monomial(2)
    full = t_over_tk(TFactor(3, 1, (2, 3)), 3)
    assert full == Polynomial([0, 3]) * Polynomial([1, F(-1, 2)]) * Polynomial([1, F(-1, 3)])
    assert full.degree == 3
    assert t_over_tk(TFactor(1, 0, (2,)), 1) == Polynomial([1, F(-1, 2)])


def test_quotient_times_tk_is_t():
    t = TFactor(F(3), 2, (F(2), F(-5, 3), F(7)))
    for k in range(1, t.degree + 1):
        assert t_over_tk(t, k) * t_family(t, k).polynomial() == t.polynomial()


nonzero = st.fractions(min_value=-9, max_value=9, max_denominator=9).filter(lambda v: v != 0)


@given(nonzero, st.integers(0, 3), st.lists(nonzero, max_size=4), st.data())
def test_degree_law(c, s, zs, data):
    t = TFactor(c, s, tuple(zs))
    if t.degree == 0:
        return
    k = data.draw(st.integers(1, t.degree))
    assert t_over_tk(t, k).degree == k
    assert t_over_tk(t, k).is_exact


def test_tfactor_validation_and_parse():
    assert TFactor.parse("3,1,2,3") == TFactor(3, 1, (2, 3))
    assert str(TFactor.parse("-1, 0, 1/2")) == "-1,0,1/2"
    for bad in ["1", "0,1", "1,1,0", "1,-1", "a,b"]:
        with pytest.raises(PreconditionError):
            TFactor.parse(bad)


def test_first_q_for_t_equal_x():
    ws = build_weighted_system(U01, TFactor(1, 1), 6, CTX)
    q0 = ws.q(0)
    assert q0.degree == 1
    assert close(q0.coeff(1), CTX.mp.sqrt(3), CTX.rel_tol)
    assert [ws.q(n).degree for n in range(7)] == list(range(1, 8))


@pytest.mark.parametrize("t", [TFactor(1, 1), TFactor(1, 0, (2,))])
def test_q_orthonormality(t):
    ws = build_weighted_system(U01, t, 25, CTX)
    assert q_gram_defect(ws, 25) < 10 * CTX.rel_tol
    assert q_gram_defect(ws, 5) < CTX.rel_tol


def test_isometry_examples():
    assert isometry_residual(Polynomial([1]), TFactor(1, 1), U01, CTX) < 1e-60
    assert isometry_residual(Polynomial.monomial(3), TFactor(1, 0, (2,)), U01, CTX) < CTX.rel_tol


def test_atom_at_zero_of_t_is_refused():
    mu = uniform(0, 1, atoms=[Atom(2, F(1, 10))])
    with pytest.raises(AtomAtZeroOfT):
        isometry_residual(Polynomial([1]), TFactor(1, 0, (2,)), mu, CTX)
    with pytest.raises(AtomAtZeroOfT):
        build_weighted_system(mu, TFactor(1, 0, (2,)), 3, CTX)


coef = st.fractions(min_value=-1, max_value=1, max_denominator=100)


@settings(max_examples=50, deadline=None)
@given(st.lists(coef, min_size=1, max_size=11))
def test_isometry_random_polynomials(cs):
    t = TFactor(3, 1, (2, 3))
    mu = uniform(0, 1, atoms=[Atom(F(1, 2), F(1, 5))])
    assert isometry_residual(Polynomial(cs), t, mu, CTX) < 10 * CTX.rel_tol


def test_expanding_a_member_recovers_unit_vector():
    ws = build_weighted_system(U01, TFactor(1, 0, (2,)), 6, CTX)
    exp = expand_in_q(ws.q(3), ws, 6)
    for n, c in enumerate(exp.coeffs):
        assert abs(c - (1 if n == 3 else 0)) < 10 * CTX.rel_tol
    assert exp.residuals[3] < 10 * CTX.rel_tol


def test_expansion_of_one_with_t_equal_x_matches_kernel_oracle():
    ws = build_weighted_system(U01, TFactor(1, 1), 20, CTX)
    exp = expand_in_q(Polynomial([1]), ws, 20)
    mom = oracles.interval_moments(50)
    for N in range(21):
        dist_sq = 1 / oracles.kernel_at_zero(mom, N + 1)
        assert dist_sq == F(1, (N + 2) ** 2)
        assert close(exp.residuals[N], CTX.to_mp(F(1, N + 2)), 10 * CTX.rel_tol)


def nonincreasing(values, slack):
    return all(b <= a + slack for a, b in zip(values, values[1:]))


@pytest.mark.parametrize(
    "t", [TFactor(1, 1), TFactor(1, 2), TFactor(1, 0, (2,)), TFactor(3, 1, (2, 3)), TFactor(1, 0, (2, 3))]
)
def test_expansion_consistency(t):
    ws = build_weighted_system(U01, t, 40, WIDE)
    for k in range(1, t.degree + 1):
        res = expand_in_q(t_over_tk(t, k), ws, 40).residuals
        assert nonincreasing(res, 10 * WIDE.rel_tol)
        if t == TFactor(1, 2) and k == 1:
            continue
        assert res[40] < 1e-8
    if t == TFactor(1, 0, (2, 3)):
        assert expand_in_q(t_over_tk(t, 2), ws, 40).residuals[40] < 1e-10



def test_slow_case_matches_gap_distance_oracle():
    # t = x^2, k = 1: expanding x in span{x^2, ..., x^42} is a gap-span
    # problem with algebraic, not geometric, decay.
    ws = build_weighted_system(U01, TFactor(1, 2), 40, WIDE)
    res = expand_in_q(t_over_tk(TFactor(1, 2), 1), ws, 40).residuals
    mom = oracles.interval_moments(90)
    for N in (10, 20, 40):
        exact = oracles.gap_distance_sq(mom, [F(0), F(1)], 2, N + 2)
        assert close(res[N] ** 2, WIDE.to_mp(exact), 10 * WIDE.rel_tol)
    assert res[40] > 1e-5


@pytest.mark.parametrize("w, d1_sq", [("0.3", F(3, 10)), ("1", F(1)), ("0.07", F(7, 100))])
def test_counterexample(w, d1_sq):
    res = counterexample_demo(w, CTX)
    assert res.d_t == 0
    assert res.d1_sq == CTX.to_mp(d1_sq)
    assert close(res.d_1, CTX.mp.sqrt(CTX.to_mp(d1_sq)), CTX.rel_tol)
    assert res.d1_sq / CTX.to_mp(F(w)) == 1


def test_counterexample_rejects_nonpositive_weight():
    with pytest.raises(PreconditionError):
        counterexample_demo("0", CTX)
