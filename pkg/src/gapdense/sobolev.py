"""The space ``L²(μ) ⊕ R^{n+1}`` with the derivative jet at 0, and the
penalized fits that push polynomials toward ``(g, 0)`` in it."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import AtomAtZeroOfT, GapdenseError, PreconditionError
from .measures import Measure, integrate, moments
from .orthopoly import build_system, check_policy, cholesky_solve, coefficient_ratio, hankel_context
from .polynomial import Polynomial
from .scalars import PrecisionContext
from .weighted import _degree_hint, _node_values


@dataclass(frozen=True)
class SobolevVector:
    f: Callable
    beta: tuple


def embed(p: Polynomial, n: int) -> SobolevVector:
    """``(p, (p(0), p'(0), ..., p^{(n)}(0)))``."""
    if n < 0:
        raise PreconditionError("n must be >= 0")
    return SobolevVector(p, tuple(p.derivative_at_zero(i) for i in range(n + 1)))


def sobolev_inner(u: SobolevVector, v: SobolevVector, mu: Measure, ctx: PrecisionContext, degree: int = 64):
    if len(u.beta) != len(v.beta):
        raise PreconditionError("jet lengths differ")
    mp = ctx.mp
    body = integrate(mu, lambda x: u.f(x) * v.f(x), ctx, degree)
    return body + mp.fsum(ctx.to_mp(a) * ctx.to_mp(b) for a, b in zip(u.beta, v.beta))


@dataclass(frozen=True)
class PenalizedFit:
    p: Polynomial
    objective: object


def penalized_fit(g, n: int, N: int, mu: Measure, ctx: PrecisionContext) -> PenalizedFit:
    """Minimize ``‖g - p‖² + Σ_{i<=n} p^{(i)}(0)²`` over ``deg p <= N``.

    With ``p^{(i)}(0) = i! c_i`` the penalty is diagonal, so the normal matrix
    is the Hankel Gram matrix plus ``(i!)²`` on its first ``n+1`` diagonal
    entries; the optimal value is ``‖g‖² - c·rhs``.
    """
    if n < 0 or N < n + 1:
        raise PreconditionError("need N >= n + 1 >= 1")
    check_policy(ctx, N)
    G = hankel_context(ctx, N)
    gm = G.mp
    m = moments(mu, 2 * N, G)
    deg = 2 * N + _degree_hint(g) + 2
    A = [[m[p + q] for q in range(N + 1)] for p in range(N + 1)]
    for i in range(n + 1):
        A[i][i] += math.factorial(i) ** 2
    rhs = [integrate(mu, lambda x, p=p: g(x) * x**p, G, deg) for p in range(N + 1)]
    c = cholesky_solve(A, rhs, G)
    g_sq = integrate(mu, lambda x: g(x) ** 2, G, deg)
    objective = g_sq - gm.fsum(u * v for u, v in zip(c, rhs))
    mp = ctx.mp
    return PenalizedFit(Polynomial([mp.mpf(v) for v in c]), mp.mpf(max(objective, 0)))


def penalized_objective(g, p: Polynomial, n: int, mu: Measure, ctx: PrecisionContext):
    """Re-evaluate ``‖g - p‖² + Σ p^{(i)}(0)²`` by direct integration."""
    mp = ctx.mp
    deg = 2 * max(p.degree, 0) + _degree_hint(g) + 2
    xs, ws = mu.discretize(ctx, deg)
    gv = _node_values(g, mu, ctx, xs)
    body = mp.fsum(w * (u - p(x)) ** 2 for x, w, u in zip(xs, ws, gv))
    return body + mp.fsum(ctx.to_mp(p.derivative_at_zero(i)) ** 2 for i in range(n + 1))


def split_gap(p: Polynomial, n: int) -> tuple[Polynomial, Polynomial]:
    """``p = q + x^{n+1} r`` with ``deg q <= n``."""
    c = p.coeffs
    zero = c[0] * 0
    return Polynomial(list(c[: n + 1]) or [zero]), Polynomial(list(c[n + 1 :]) or [zero])


def _check_half_line(mu: Measure, what: str):
    if mu.continuous is not None and mu.continuous.a < 0:
        raise PreconditionError(f"{what}: continuous support must lie in [0, inf)")


@dataclass(frozen=True)
class DemoRow:
    N: int
    objective: object
    q_norm: object
    gap_residual: object
    p_at_0: object


def maindense2_demo(g, n: int, Ns: Sequence[int], mu: Measure, ctx: PrecisionContext) -> list[DemoRow]:
    """Penalized fits ``p_N``, split as ``q_N + x^{n+1} r_N``, and the distance
    ``‖g - x^{n+1} r_N‖`` that the jet penalty drives down."""
    _check_half_line(mu, "maindense2_demo")
    if any(a.x < 0 for a in mu.atoms):
        raise PreconditionError("maindense2_demo: atoms must lie in [0, inf)")
    if mu.atom_at(0) is not None:
        raise AtomAtZeroOfT("μ({0}) > 0: the jet at 0 is visible to L²(μ)")
    mp = ctx.mp
    rows = []
    for N in Ns:
        fit = penalized_fit(g, n, N, mu, ctx)
        q, r = split_gap(fit.p, n)
        tail = r.shift(n + 1)
        deg = 2 * N + _degree_hint(g) + 2
        xs, ws = mu.discretize(ctx, deg)
        gv = _node_values(g, mu, ctx, xs)
        q_norm = mp.sqrt(mp.fsum(w * q(x) ** 2 for x, w in zip(xs, ws)))
        gap = mp.sqrt(mp.fsum(w * (u - tail(x)) ** 2 for x, w, u in zip(xs, ws, gv)))
        if gap > mp.sqrt(fit.objective) + q_norm + 10 * ctx.rel_tol:
            raise GapdenseError(f"triangle bound violated at N={N}")
        rows.append(DemoRow(N, fit.objective, q_norm, gap, fit.p.coeff(0)))
    return rows


def ratio_table(mu: Measure, k: int, ns: Sequence[int], ctx: PrecisionContext) -> list[tuple]:
    """``(n, |γ_{n,k}/γ_{n,k+1}|)`` for each requested ``n``."""
    _check_half_line(mu, "ratio_table")
    if mu.continuous is None or mu.continuous.a > 0:
        warnings.warn("0 is not in the support of the continuous part; the ratios need not decay", stacklevel=2)
    ns = list(ns)
    sys = build_system(mu, max(ns), ctx)
    return [(n, coefficient_ratio(sys, n, k)) for n in ns]
