"""Orthonormal polynomial systems built from moments.

The primary construction factorizes the Hankel moment matrix ``H = L L^T``;
row ``n`` of ``L^{-1}`` holds the monomial coefficients of ``p_n`` and the
Jacobi recurrence coefficients are read off ``L``.  The Stieltjes procedure in
:func:`stieltjes_recurrence` is an independent route to the same recurrence.

Hankel matrices are badly conditioned, so the factorization runs with guard
bits (see :func:`hankel_context`) and results are rounded back to the caller's
working precision.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BracketingFailure, DivisionByNegligible, PreconditionError, PrecisionExhausted
from .measures import Measure, moments
from .polynomial import Polynomial
from .scalars import PrecisionContext, hankel_loss_bits, required_bits


def hankel_context(ctx: PrecisionContext, order: int) -> PrecisionContext:
    """Context wide enough that an order-``order`` Hankel factorization keeps
    ``ctx.mantissa_bits`` significant bits."""
    return ctx.guarded(hankel_loss_bits(order))


def check_policy(ctx: PrecisionContext, degree: int) -> None:
    need = required_bits(max(degree, 1))
    if ctx.mantissa_bits < need:
        raise PrecisionExhausted(
            f"degree {degree} needs at least {need} mantissa bits, context has {ctx.mantissa_bits}"
        )


def cholesky(A, ctx: PrecisionContext):
    """Lower-triangular ``L`` with ``A = L L^T``, entries in ``ctx``.

    Raises :class:`PrecisionExhausted` when a pivot is not positive or is
    indistinguishable from rounding noise.
    """
    mp = ctx.mp
    n = len(A)
    L = [[mp.zero] * n for _ in range(n)]
    noise = mp.ldexp(1, 8 - ctx.mantissa_bits)
    for k in range(n):
        akk = mp.mpf(A[k][k])
        d = akk - mp.fsum(L[k][j] ** 2 for j in range(k))
        if d <= noise * (k + 1) * abs(akk):
            raise PrecisionExhausted(
                f"Cholesky pivot {k} lost all significant bits at {ctx.mantissa_bits} bits"
            )
        L[k][k] = mp.sqrt(d)
        for i in range(k + 1, n):
            s = mp.mpf(A[i][k]) - mp.fsum(L[i][j] * L[k][j] for j in range(k))
            L[i][k] = s / L[k][k]
    return L


def lower_inverse(L, ctx: PrecisionContext):
    mp = ctx.mp
    n = len(L)
    C = [[mp.zero] * n for _ in range(n)]
    for i in range(n):
        C[i][i] = 1 / L[i][i]
        for j in range(i - 1, -1, -1):
            s = mp.fsum(L[i][k] * C[k][j] for k in range(j, i))
            C[i][j] = -s / L[i][i]
    return C


def cholesky_solve(A, rhs, ctx: PrecisionContext):
    """Solve the SPD system ``A c = rhs`` by Cholesky, all in ``ctx``."""
    mp = ctx.mp
    L = cholesky(A, ctx)
    n = len(L)
    y = [mp.zero] * n
    for i in range(n):
        y[i] = (mp.mpf(rhs[i]) - mp.fsum(L[i][k] * y[k] for k in range(i))) / L[i][i]
    c = [mp.zero] * n
    for i in range(n - 1, -1, -1):
        c[i] = (y[i] - mp.fsum(L[k][i] * c[k] for k in range(i + 1, n))) / L[i][i]
    return c


@dataclass(frozen=True)
class OrthonormalSystem:
    """``p_0..p_N`` with Jacobi recurrence
    ``x p_n = b_{n+1} p_{n+1} + a_n p_n + b_n p_{n-1}``.

    ``a`` has entries ``a_0..a_N``; ``b`` has ``b_0 = 0, b_1..b_{N+1}``.
    """

    polys: tuple
    a: tuple
    b: tuple
    m0: object
    ctx: PrecisionContext
    measure: Measure | None = None

    @property
    def N(self) -> int:
        return len(self.polys) - 1

    def leading(self, n: int):
        return self.polys[n].coeff(n)

    def jacobi(self, n: int):
        """Diagonal and off-diagonal of the order-``n`` Jacobi matrix."""
        return self.a[:n], self.b[1:n]

    def evaluate(self, n: int, x):
        """``p_0(x)..p_n(x)`` by the three-term recurrence."""
        mp = self.ctx.mp
        x = mp.mpf(x)
        vals = [1 / mp.sqrt(self.m0)]
        prev = mp.zero
        for k in range(n):
            nxt = ((x - self.a[k]) * vals[-1] - self.b[k] * prev) / self.b[k + 1]
            prev = vals[-1]
            vals.append(nxt)
        return vals


def orthonormalize(mom, N: int, ctx: PrecisionContext, measure: Measure | None = None) -> OrthonormalSystem:
    """Orthonormal system ``p_0..p_N`` from the moment sequence ``mom``.

    ``mom`` needs at least ``2N+1`` entries; with ``2N+3`` entries the
    recurrence is complete through ``a_N, b_{N+1}``.  For full accuracy pass
    moments computed at :func:`hankel_context`.
    """
    if N < 0:
        raise PreconditionError("N must be >= 0")
    if len(mom) < 2 * N + 1:
        raise PreconditionError(f"need {2 * N + 1} moments, got {len(mom)}")
    check_policy(ctx, N)
    K = min((len(mom) - 1) // 2, N + 1)  # top degree factorized
    g = hankel_context(ctx, K)
    gm = g.mp
    m = [g.to_mp(v) for v in mom[: 2 * K + 1]]
    H = [[m[i + j] for j in range(K + 1)] for i in range(K + 1)]
    L = cholesky(H, g)
    C = lower_inverse(L, g)
    mp = ctx.mp
    polys = tuple(Polynomial([mp.mpf(C[n][k]) for k in range(n + 1)]) for n in range(N + 1))
    b = [gm.zero] + [L[n][n] / L[n - 1][n - 1] for n in range(1, K + 1)]
    a = []
    for n in range(K):
        v = L[n + 1][n] / L[n][n]
        if n:
            v -= L[n][n - 1] / L[n - 1][n - 1]
        a.append(v)
    return OrthonormalSystem(
        polys,
        tuple(mp.mpf(v) for v in a),
        tuple(mp.mpf(v) for v in b),
        mp.mpf(m[0]),
        ctx,
        measure,
    )


def build_system(mu: Measure, N: int, ctx: PrecisionContext) -> OrthonormalSystem:
    """Moments of ``mu`` at guard precision, then :func:`orthonormalize`."""
    check_policy(ctx, N)
    g = hankel_context(ctx, N + 1)
    return orthonormalize(moments(mu, 2 * N + 2, g), N, ctx, mu)


def stieltjes_recurrence(mu: Measure, N: int, ctx: PrecisionContext):
    """Recurrence coefficients by the discretized Stieltjes procedure.

    Returns ``(a, b)`` shaped like :class:`OrthonormalSystem`: ``a_0..a_N`` and
    ``b_0 = 0, b_1..b_{N+1}``.
    """
    if N < 1:
        raise PreconditionError("N must be >= 1")
    mp = ctx.mp
    xs, ws = mu.discretize(ctx, 2 * N + 2)
    m0 = mp.fsum(ws)
    cur = [1 / mp.sqrt(m0)] * len(xs)
    prev = [mp.zero] * len(xs)
    a, b = [], [mp.zero]
    for n in range(N + 1):
        an = mp.fsum(w * x * p * p for x, w, p in zip(xs, ws, cur))
        a.append(an)
        nxt = [(x - an) * p - b[n] * q for x, p, q in zip(xs, cur, prev)]
        bn2 = mp.fsum(w * v * v for w, v in zip(ws, nxt))
        if bn2 <= 0:
            raise PrecisionExhausted(f"Stieltjes b_{n + 1} underflowed")
        bn = mp.sqrt(bn2)
        b.append(bn)
        prev, cur = cur, [v / bn for v in nxt]
    return tuple(a), tuple(b)


def polys_from_recurrence(a, b, m0, N: int, ctx: PrecisionContext) -> list[Polynomial]:
    """Monomial coefficients of ``p_0..p_N`` generated by the recurrence."""
    mp = ctx.mp
    p_prev = Polynomial([mp.zero])
    p = Polynomial([1 / mp.sqrt(mp.mpf(m0))])
    out = [p]
    for n in range(N):
        nxt = (p.shift(1) - p.scale(a[n]) - p_prev.scale(b[n])).scale(1 / b[n + 1])
        p_prev, p = p, nxt
        out.append(p)
    return out


def sturm_count(diag, off, x) -> int:
    """Number of eigenvalues of the symmetric tridiagonal matrix below ``x``."""
    count = 0
    d = None
    for i, ai in enumerate(diag):
        d = ai - x if i == 0 else ai - x - off[i - 1] ** 2 / d
        if d == 0:
            d = x.context.ldexp(1, -4 * x.context.prec) * (1 + abs(ai))
        if d < 0:
            count += 1
    return count


def tridiagonal_eigenvalues(diag, off, ctx: PrecisionContext) -> list:
    """All eigenvalues, ascending, by bisection on Sturm counts."""
    mp = ctx.mp
    n = len(diag)
    if n == 0:
        return []
    diag = [mp.mpf(v) for v in diag]
    off = [mp.mpf(v) for v in off]
    radius = [
        (abs(off[i - 1]) if i > 0 else 0) + (abs(off[i]) if i < n - 1 else 0) for i in range(n)
    ]
    lo0 = min(d - r for d, r in zip(diag, radius))
    hi0 = max(d + r for d, r in zip(diag, radius))
    pad = (hi0 - lo0) / 16 + mp.ldexp(1, -ctx.mantissa_bits)
    lo0, hi0 = lo0 - pad, hi0 + pad
    eps = mp.ldexp(1, -ctx.mantissa_bits)
    out = []
    for k in range(n):
        lo, hi = (out[-1] if out else lo0), hi0
        # invariant: count(lo) <= k < count(hi)
        if out:
            lo = lo - (hi0 - lo0) * eps
        for _ in range(8 * ctx.mantissa_bits):
            mid = (lo + hi) / 2
            if mid == lo or mid == hi or hi - lo <= 2 * eps * max(abs(lo), abs(hi)):
                break
            if sturm_count(diag, off, mid) > k:
                hi = mid
            else:
                lo = mid
        out.append((lo + hi) / 2)
    return out


def zeros(sys: OrthonormalSystem, n: int, ctx: PrecisionContext | None = None) -> list:
    """Zeros of ``p_n``, ascending, as eigenvalues of the order-``n`` Jacobi matrix."""
    ctx = ctx or sys.ctx
    if not 1 <= n <= sys.N:
        raise PreconditionError(f"n must lie in 1..{sys.N}")
    diag, off = sys.jacobi(n)
    return tridiagonal_eigenvalues(diag, off, ctx)


def _negligible(value, poly: Polynomial, ctx: PrecisionContext) -> bool:
    scale = max(abs(c) for c in poly.coeffs)
    return abs(value) <= ctx.rel_tol * scale


def coefficient_ratio(sys: OrthonormalSystem, n: int, k: int):
    """``|γ_{n,k} / γ_{n,k+1}|`` for the monomial coefficients of ``p_n``."""
    if not (0 <= k and k + 1 <= n <= sys.N):
        raise PreconditionError(f"need k+1 <= n <= {sys.N}, got n={n}, k={k}")
    p = sys.polys[n]
    num, den = p.coeff(k), p.coeff(k + 1)
    if _negligible(den, p, sys.ctx):
        raise DivisionByNegligible(f"γ_{{{n},{k + 1}}} is negligible at working precision")
    return abs(num / den)


def _bisect_root(f, lo, hi, flo, ctx: PrecisionContext):
    mp = ctx.mp
    eps = mp.ldexp(1, -ctx.mantissa_bits)
    for _ in range(8 * ctx.mantissa_bits):
        mid = (lo + hi) / 2
        if mid == lo or mid == hi or hi - lo <= 2 * eps * max(abs(lo), abs(hi)):
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return (lo + hi) / 2


def derivative_zeros(sys: OrthonormalSystem, n: int, j: int, ctx: PrecisionContext | None = None) -> list:
    """Zeros of ``p_n^{(j)}``, each located inside a bracket formed by two
    consecutive zeros of ``p_n^{(j-1)}``."""
    ctx = ctx or sys.ctx
    if not 0 <= j < n:
        raise PreconditionError("need 0 <= j < n")
    roots = zeros(sys, n, ctx)
    for level in range(1, j + 1):
        d = sys.polys[n].derivative(level)
        found = []
        for lo, hi in zip(roots, roots[1:]):
            flo, fhi = d(lo), d(hi)
            if flo == 0:
                found.append(lo)
                continue
            if (flo < 0) == (fhi < 0):
                raise BracketingFailure(
                    f"p_{n}^({level}) has no sign change on [{ctx.mp.nstr(lo, 15)}, {ctx.mp.nstr(hi, 15)}]"
                )
            found.append(_bisect_root(d, lo, hi, flo, ctx))
        roots = found
    return roots


def log_derivative_identity_residual(sys: OrthonormalSystem, n: int, j: int, ctx: PrecisionContext | None = None):
    """Relative gap between ``p_n^{(j+1)}(0)/p_n^{(j)}(0)`` read from the
    coefficients and ``Σ_k 1/(-x_{k,j})`` over the zeros of ``p_n^{(j)}``."""
    ctx = ctx or sys.ctx
    if not (j + 1 < n <= sys.N):
        raise PreconditionError(f"need j+1 < n <= {sys.N}")
    left = log_derivative_at_zero(sys, n, j)
    right = ctx.mp.fsum(-1 / x for x in derivative_zeros(sys, n, j, ctx))
    return abs(left - right) / abs(left)


def log_derivative_at_zero(sys: OrthonormalSystem, n: int, j: int):
    """``p_n^{(j+1)}(0) / p_n^{(j)}(0) = (j+1) γ_{n,j+1} / γ_{n,j}``."""
    p = sys.polys[n]
    num, den = p.coeff(j + 1), p.coeff(j)
    if _negligible(den, p, sys.ctx) or _negligible(num, p, sys.ctx):
        raise PreconditionError(f"p_{n}^({j})(0) or p_{n}^({j + 1})(0) vanishes")
    return (j + 1) * num / den


def christoffel_kernel(sys: OrthonormalSystem, x, y, N: int):
    """``K_N(x, y) = Σ_{n<=N} p_n(x) p_n(y)``."""
    if N > sys.N:
        raise PreconditionError(f"N={N} exceeds system size {sys.N}")
    mp = sys.ctx.mp
    x, y = sys.ctx.to_mp(x), sys.ctx.to_mp(y)
    return mp.fsum(sys.polys[n](x) * sys.polys[n](y) for n in range(N + 1))


def gram_defect(sys: OrthonormalSystem, N: int | None = None, degree: int | None = None):
    """``max |∫ p_m p_n dμ - δ_mn|`` over ``m, n <= N`` by direct quadrature."""
    if sys.measure is None:
        raise PreconditionError("system carries no measure")
    N = sys.N if N is None else N
    ctx = sys.ctx
    mp = ctx.mp
    xs, ws = sys.measure.discretize(ctx, degree if degree is not None else 2 * N + 2)
    vals = [[p(x) for x in xs] for p in sys.polys[: N + 1]]
    worst = mp.zero
    for m in range(N + 1):
        for n in range(m + 1):
            g = mp.fsum(w * u * v for w, u, v in zip(ws, vals[m], vals[n]))
            worst = max(worst, abs(g - (1 if m == n else 0)))
    return worst
