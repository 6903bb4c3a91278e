"""Exact rational reference computations, independent of the package.

Everything here works on a moment functional ``L(x^k) = mom[k]`` with
``Fraction`` arithmetic only, so results carry no rounding at all.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial


def interval_moments(count: int, a=0, b=1, weight=Fraction(1)) -> list[Fraction]:
    """``∫_a^b x^k dx`` scaled by ``weight`` for ``k < count``."""
    a, b = Fraction(a), Fraction(b)
    return [weight * (b ** (k + 1) - a ** (k + 1)) / (k + 1) for k in range(count)]


def add_atoms(mom: list[Fraction], atoms) -> list[Fraction]:
    out = list(mom)
    for x, w in atoms:
        x, w = Fraction(x), Fraction(w)
        for k in range(len(out)):
            out[k] += w * x**k
    return out


def functional(p: list[Fraction], mom) -> Fraction:
    return sum((c * mom[k] for k, c in enumerate(p)), Fraction(0))


def polymul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, u in enumerate(p):
        for j, v in enumerate(q):
            out[i + j] += u * v
    return out


def monic_orthogonal(mom, N: int):
    """Monic orthogonal ``π_0..π_N`` (coefficient lists) and norms ``h_n = L(π_n²)``,
    by classical Gram–Schmidt on the monomials."""
    polys, norms = [], []
    for n in range(N + 1):
        p = [Fraction(0)] * n + [Fraction(1)]
        for q, h in zip(polys, norms):
            c = functional(polymul(p, q), mom) / h
            p = [u - c * (q[k] if k < len(q) else 0) for k, u in enumerate(p)]
        polys.append(p)
        norms.append(functional(polymul(p, p), mom))
    return polys, norms


def recurrence(mom, N: int):
    """Exact ``a_n`` and ``b_n²`` of the orthonormal recurrence for ``n <= N``."""
    polys, norms = monic_orthogonal(mom, N + 1)
    a = [functional(polymul([0, 1], polymul(p, p)), mom) / h for p, h in zip(polys[: N + 1], norms)]
    b_sq = [Fraction(0)] + [norms[n] / norms[n - 1] for n in range(1, N + 2)]
    return a, b_sq


def kernel_at_zero(mom, N: int) -> Fraction:
    """``K_N(0,0) = Σ π_n(0)² / h_n``."""
    polys, norms = monic_orthogonal(mom, N)
    return sum((p[0] ** 2 / h for p, h in zip(polys, norms)), Fraction(0))


def solve(A, rhs):
    """Gauss–Jordan elimination over the rationals."""
    n = len(A)
    M = [list(map(Fraction, row)) + [Fraction(r)] for row, r in zip(A, rhs)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [u - f * v for u, v in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def gap_distance_sq(mom, f: list[Fraction], j: int, N: int) -> Fraction:
    """Squared distance from polynomial ``f`` to ``span{x^j..x^N}``."""
    A = [[mom[p + q] for q in range(j, N + 1)] for p in range(j, N + 1)]
    rhs = [functional(polymul(f, [0] * p + [1]), mom) for p in range(j, N + 1)]
    c = solve(A, rhs)
    return functional(polymul(f, f), mom) - sum(u * v for u, v in zip(c, rhs))


def penalized(mom, g: list[Fraction], n: int, N: int):
    """Minimizer coefficients and value of ``‖g - p‖² + Σ_{i<=n} p^{(i)}(0)²``."""
    A = [[mom[p + q] + (factorial(p) ** 2 if p == q <= n else 0) for q in range(N + 1)] for p in range(N + 1)]
    rhs = [functional(polymul(g, [0] * p + [1]), mom) for p in range(N + 1)]
    c = solve(A, rhs)
    return c, functional(polymul(g, g), mom) - sum(u * v for u, v in zip(c, rhs))
