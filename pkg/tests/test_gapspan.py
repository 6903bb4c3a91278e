from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from gapdense.errors import AtomAtZeroOfT, PreconditionError
from gapdense.expr import parse_density
from gapdense.gapspan import (
    NORMAL,
    WEIGHTED,
    convergence_table,
    gap_project_normal,
    gap_project_weighted,
    muntz_partial_sums,
)
from gapdense.measures import Atom, integrate, uniform
from gapdense.polynomial import Polynomial
from gapdense.scalars import PrecisionContext
from gapdense.weighted import TFactor, build_weighted_system

import oracles

CTX = PrecisionContext.for_degree(20)
U01 = uniform(0, 1)
F = Fraction
ONE = Polynomial([1])
EXP = parse_density("exp(x)")


def close(a, b, tol):
    return abs(a - b) <= tol * max(1, abs(b))


def test_member_is_recovered():
    r = gap_project_normal(Polynomial.monomial(3), 1, 3, U01, CTX)
    assert r.method == NORMAL
    for c, e in zip(r.coeffs, (0, 0, 1)):
        assert abs(c - e) < 1e-50
    assert r.residual < 1e-60 or r.residual < 10 * CTX.rel_tol


@pytest.mark.parametrize("N", [5, 10, 20])
def test_distance_from_one_matches_kernel_oracle(N):
    exact = 1 / oracles.kernel_at_zero(oracles.interval_moments(2 * N + 2), N)
    assert exact == F(1, (N + 1) ** 2)
    assert exact == oracles.gap_distance_sq(oracles.interval_moments(2 * N + 2), [F(1)], 1, N)
    r = gap_project_normal(ONE, 1, N, U01, CTX)
    assert close(r.residual, CTX.mp.mpf(1) / (N + 1), 1e-20 * (N + 1))


def test_constants_retained():
    r = gap_project_normal(ONE, 0, 0, U01, CTX)
    assert close(r.coeffs[0], 1, CTX.rel_tol)
    assert r.residual < CTX.rel_tol


def test_weighted_examples():
    r = gap_project_weighted(ONE, 1, 10, U01, CTX)
    assert r.method == WEIGHTED
    assert abs(r.residual - CTX.mp.mpf(1) / 11) < 1e-20
    ws = build_weighted_system(U01, TFactor(1, 2), 4, CTX)
    for N in (4, 6):
        assert gap_project_weighted(ws.q(2), 2, N, U01, CTX).residual < CTX.rel_tol


def test_atom_at_zero_blocks_weighted_path():
    mu = uniform(0, 1, atoms=[Atom(0, F(1, 2))])
    with pytest.raises(AtomAtZeroOfT):
        gap_project_weighted(ONE, 1, 5, mu, CTX)
    # j = 0 has t = 1, which has no zeros
    gap_project_weighted(ONE, 0, 3, mu, CTX)


def test_convergence_table_examples():
    rows = convergence_table(ONE, 1, (5, 10, 20), U01, CTX)
    for r, d in zip(rows, (6, 11, 21)):
        assert close(r.residual, CTX.mp.mpf(1) / d, 1e-20)
    rows = convergence_table(Polynomial.monomial(1), 2, (5, 10), U01, CTX)
    assert 0 < rows[1].residual < rows[0].residual
    with pytest.raises(PreconditionError):
        convergence_table(ONE, 1, (10, 5), U01, CTX)


def test_exp_with_constants_against_wider_run():
    rows = convergence_table(EXP, 0, (5, 10), U01, CTX)
    ref = convergence_table(EXP, 0, (5, 10), U01, PrecisionContext(400))
    assert rows[1].residual < rows[0].residual < 1e-3
    for r, s in zip(rows, ref):
        assert abs(r.residual - s.residual) <= 10 * CTX.rel_tol * s.residual


@pytest.mark.parametrize("f", [ONE, EXP, Polynomial.monomial(3)], ids=["one", "exp", "cube"])
@pytest.mark.parametrize("j", [1, 2, 3])
def test_method_equivalence(f, j):
    for N in sorted({j, j + 1, 9, 20}):
        a = gap_project_normal(f, j, N, U01, CTX)
        b = gap_project_weighted(f, j, N, U01, CTX)
        assert all(abs(u - v) < 1e-20 for u, v in zip(a.coeffs, b.coeffs))
        assert abs(a.residual - b.residual) < 1e-20


def test_residual_monotone_in_N_and_j():
    slack = 10 * CTX.rel_tol
    for f in (ONE, EXP):
        table = {(j, N): gap_project_normal(f, j, N, U01, CTX).residual for j in (1, 2, 3) for N in range(3, 13)}
        for j in (1, 2, 3):
            for N in range(3, 12):
                assert table[j, N + 1] <= table[j, N] + slack
        for j in (1, 2):
            for N in range(3, 13):
                assert table[j + 1, N] + slack >= table[j, N]


def test_error_is_orthogonal_to_retained_monomials():
    for j, N in ((1, 8), (2, 12)):
        r = gap_project_normal(EXP, j, N, U01, CTX)
        p = r.polynomial()
        for k in range(j, N + 1):
            ip = integrate(U01, lambda x: (EXP(x) - p(x)) * x**k, CTX, 2 * N + 40)
            assert abs(ip) < 10 * CTX.rel_tol


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 3), st.lists(st.fractions(min_value=-2, max_value=2, max_denominator=10), min_size=1, max_size=6))
def test_exact_recovery(j, cs):
    f = Polynomial([0] * j + cs)
    N = j + len(cs) - 1 + 2
    assert gap_project_normal(f, j, N, U01, CTX).residual < 10 * CTX.rel_tol


def test_muntz_examples():
    assert muntz_partial_sums([1, 2, 3], 3) == [F(1, 2), F(9, 10), F(6, 5)]
    assert muntz_partial_sums([2, 4], 2) == [F(2, 5), F(2, 5) + F(4, 17)]
    s = muntz_partial_sums(range(1, 101), 100)
    direct = sum(F(k, k * k + 1) for k in range(1, 101))
    assert s[-1] == direct and s[-1] > s[9] + 1
    with pytest.raises(PreconditionError):
        muntz_partial_sums([2, 1], 2)
    with pytest.raises(PreconditionError):
        muntz_partial_sums([1], 2)


def test_muntz_partial_sums_increase():
    s = muntz_partial_sums(["0.5", "1.5", "4", "10"], 4)
    assert all(b > a for a, b in zip(s, s[1:]))
