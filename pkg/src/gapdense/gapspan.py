"""Best ``L²(μ)`` approximation from gap spans ``span{x^j, ..., x^N}``.

Two independent solvers are kept side by side: the normal equations on the
shifted Hankel block, and projection onto the ``q_{n,t}`` system with
``t = x^j``.  Their agreement certifies that the precision sufficed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import AtomAtZeroOfT, PreconditionError, PrecisionExhausted
from .measures import Measure, integrate, moments
from .orthopoly import check_policy, cholesky_solve, hankel_context
from .polynomial import Polynomial
from .scalars import PrecisionContext
from .weighted import TFactor, _degree_hint, _node_values, build_weighted_system

NORMAL = "normal-equations"
WEIGHTED = "weighted-q"


@dataclass(frozen=True)
class ApproximationReport:
    j: int
    N: int
    coeffs: tuple  # c_j..c_N
    residual: object  # ‖f - Σ c_k x^k‖ by direct integration
    method: str
    residual_sq_identity: object = None  # ‖f‖² - (Gram form), the solver's own estimate

    def polynomial(self) -> Polynomial:
        zero = self.coeffs[0] * 0
        return Polynomial([zero] * self.j + list(self.coeffs))


def _error_norm(f, approx: Polynomial, mu: Measure, ctx: PrecisionContext, degree: int):
    mp = ctx.mp
    xs, ws = mu.discretize(ctx, degree)
    fv = _node_values(f, mu, ctx, xs)
    return mp.sqrt(mp.fsum(w * (u - approx(x)) ** 2 for x, w, u in zip(xs, ws, fv)))


def gap_project_normal(f, j: int, N: int, mu: Measure, ctx: PrecisionContext) -> ApproximationReport:
    """Solve the normal equations ``Σ_q m_{p+q} c_q = <f, x^p>`` for ``p, q = j..N``."""
    if not 0 <= j <= N:
        raise PreconditionError("need 0 <= j <= N")
    check_policy(ctx, N)
    g = hankel_context(ctx, N)
    m = moments(mu, 2 * N, g)
    deg = 2 * N + _degree_hint(f) + 2
    rhs = [integrate(mu, lambda x, p=p: f(x) * x**p, g, deg) for p in range(j, N + 1)]
    A = [[m[p + q] for q in range(j, N + 1)] for p in range(j, N + 1)]
    c = cholesky_solve(A, rhs, g)
    f_sq = integrate(mu, lambda x: f(x) ** 2, g, deg)
    gram_sq = f_sq - g.mp.fsum(u * v for u, v in zip(c, rhs))
    mp = ctx.mp
    coeffs = tuple(mp.mpf(v) for v in c)
    report = ApproximationReport(j, N, coeffs, None, NORMAL, mp.mpf(gram_sq))
    residual = _error_norm(f, report.polynomial(), mu, ctx, deg)
    if abs(residual**2 - gram_sq) > 10 * ctx.rel_tol * max(f_sq, 1):
        raise PrecisionExhausted("direct and Gram-form residuals disagree")
    return ApproximationReport(j, N, coeffs, residual, NORMAL, mp.mpf(gram_sq))


def gap_project_weighted(f, j: int, N: int, mu: Measure, ctx: PrecisionContext) -> ApproximationReport:
    """Project onto ``span{q_{0,t}, ..., q_{N-j,t}}`` with ``t = x^j``."""
    if not 0 <= j <= N:
        raise PreconditionError("need 0 <= j <= N")
    if j >= 1 and mu.atom_at(0) is not None:
        raise AtomAtZeroOfT("μ has an atom at 0, a zero of t = x^j")
    mp = ctx.mp
    ws = build_weighted_system(mu, TFactor(1, j, ()), N - j, ctx)
    deg = 2 * N + _degree_hint(f) + 2
    xs, wts = mu.discretize(ctx, deg)
    fv = _node_values(f, mu, ctx, xs)
    qv = [ws.q_values(N - j, x) for x in xs]
    c = [mp.fsum(w * u * q[n] for w, u, q in zip(wts, fv, qv)) for n in range(N - j + 1)]
    approx = Polynomial([mp.zero])
    for n, cn in enumerate(c):
        approx = approx + ws.q(n).scale(cn)
    f_sq = mp.fsum(w * u * u for w, u in zip(wts, fv))
    bessel_sq = f_sq - mp.fsum(v * v for v in c)
    coeffs = tuple(approx.coeff(k) for k in range(j, N + 1))
    residual = _error_norm(f, approx, mu, ctx, deg)
    return ApproximationReport(j, N, coeffs, residual, WEIGHTED, bessel_sq)


def convergence_table(f, j: int, Ns: Sequence[int], mu: Measure, ctx: PrecisionContext) -> list[ApproximationReport]:
    Ns = list(Ns)
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise PreconditionError("Ns must be strictly increasing")
    return [gap_project_normal(f, j, N, mu, ctx) for N in Ns]


def muntz_partial_sums(lambdas: Sequence, J: int) -> list:
    """Partial sums of ``Σ λ_j / (λ_j² + 1)``; exact when the exponents are rational."""
    lam = [Fraction(v) if isinstance(v, (int, str, Fraction)) else v for v in lambdas]
    if len(lam) < J:
        raise PreconditionError(f"need at least {J} exponents")
    if any(v <= 0 for v in lam[:J]) or any(b <= a for a, b in zip(lam[:J], lam[1:J])):
        raise PreconditionError("exponents must be positive and strictly increasing")
    out, acc = [], 0
    for v in lam[:J]:
        acc = acc + v / (v * v + 1)
        out.append(acc)
    return out
