"""Weight factors ``t(x) = c x^s Π (1 - x/x_j)`` and the system ``q_n = t p_{n,t}``.

``p_{n,t}`` are orthonormal for ``t^2 dμ``; multiplying by ``t`` carries them
to functions orthonormal in ``L^2(μ)`` whose span contains every ``t / t_k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import PreconditionError
from .expr import BinOp, Expr, Pow, Var, constant
from .measures import Atom, AtomValued, Continuous, Measure, integrate, uniform, weighted_measure
from .orthopoly import OrthonormalSystem, build_system
from .polynomial import Polynomial
from .scalars import PrecisionContext, to_fraction


@dataclass(frozen=True)
class TFactor:
    c: Fraction
    s: int
    zeros: tuple[Fraction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "c", to_fraction(self.c))
        object.__setattr__(self, "zeros", tuple(to_fraction(z) for z in self.zeros))
        if self.c == 0:
            raise PreconditionError("t needs a nonzero constant c")
        if self.s < 0:
            raise PreconditionError("s must be >= 0")
        if any(z == 0 for z in self.zeros):
            raise PreconditionError("the zeros x_j must be nonzero")

    @classmethod
    def parse(cls, text: str) -> "TFactor":
        """``"c,s,x1,x2,..."`` as used on the command line."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) < 2:
            raise PreconditionError("t must be given as 'c,s[,x1,...]'")
        try:
            return cls(Fraction(parts[0]), int(parts[1]), tuple(Fraction(p) for p in parts[2:]))
        except ValueError as exc:
            raise PreconditionError(f"bad t specification {text!r}: {exc}") from None

    @property
    def M(self) -> int:
        return len(self.zeros)

    @property
    def degree(self) -> int:
        return self.s + self.M

    def __call__(self, x):
        v = self.c * x**self.s
        for z in self.zeros:
            v = v * (1 - x / z)
        return v

    def polynomial(self) -> Polynomial:
        p = Polynomial.monomial(self.s, self.c)
        for z in self.zeros:
            p = p * Polynomial([1, -1 / z])
        return p

    def expr(self) -> Expr:
        node: Expr = constant(self.c)
        if self.s:
            node = BinOp("*", node, Pow(Var(), self.s))
        for z in self.zeros:
            node = BinOp("*", node, BinOp("-", constant(1), BinOp("/", Var(), constant(z))))
        return node

    def __str__(self):
        return ",".join([str(self.c), str(self.s)] + [str(z) for z in self.zeros])


def t_family(t: TFactor, k: int) -> TFactor:
    """``t_k = t / x^k`` for ``k <= s``; for ``k = s+i`` the tail product over ``x_{i+1}..x_M``."""
    if not 1 <= k <= t.degree:
        raise PreconditionError(f"k must lie in 1..{t.degree}")
    if k <= t.s:
        return TFactor(t.c, t.s - k, t.zeros)
    return TFactor(1, 0, t.zeros[k - t.s :])


def t_over_tk(t: TFactor, k: int) -> Polynomial:
    """The exact quotient ``t / t_k``, a polynomial of degree ``k``."""
    if not 1 <= k <= t.degree:
        raise PreconditionError(f"k must lie in 1..{t.degree}")
    if k <= t.s:
        return Polynomial.monomial(k)
    return TFactor(t.c, t.s, t.zeros[: k - t.s]).polynomial()


@dataclass(frozen=True)
class WeightedSystem:
    t: TFactor
    inner: OrthonormalSystem
    mu: Measure

    @property
    def N(self) -> int:
        return self.inner.N

    def q(self, n: int) -> Polynomial:
        """``q_n = t · p_{n,t}`` expanded in monomials at working precision."""
        tp = self.t.polynomial().map(lambda c: self.inner.ctx.to_mp(c))
        return tp * self.inner.polys[n]

    def q_values(self, n: int, x) -> list:
        """``q_0(x)..q_n(x)`` via the recurrence of the inner system."""
        tx = self.t(x)
        return [tx * v for v in self.inner.evaluate(n, x)]


def build_weighted_system(mu: Measure, t: TFactor, N: int, ctx: PrecisionContext) -> WeightedSystem:
    nu = weighted_measure(mu, t)
    return WeightedSystem(t, build_system(nu, N, ctx), mu)


def _degree_hint(f) -> int:
    if isinstance(f, Polynomial):
        return max(f.degree, 0)
    p = f.poly() if hasattr(f, "poly") else None
    return len(p) - 1 if p is not None else 24


def isometry_residual(f: Polynomial, t: TFactor, mu: Measure, ctx: PrecisionContext):
    """``| ‖t f‖²_{L²(μ)} - ‖f‖²_{L²(t²μ)} |`` from two separate integrations."""
    nu = weighted_measure(mu, t)
    d = _degree_hint(f)
    lhs = integrate(mu, lambda x: (t(x) * f(x)) ** 2, ctx, 2 * (d + t.degree))
    rhs = integrate(nu, lambda x: f(x) ** 2, ctx, 2 * d)
    return abs(lhs - rhs)


@dataclass(frozen=True)
class Expansion:
    coeffs: tuple
    residuals: tuple


def _node_values(f, mu: Measure, ctx: PrecisionContext, xs):
    """``f`` at discretization nodes; atoms (the tail of ``xs``) honour overrides."""
    n_atoms = len(mu.atoms)
    out = [f(x) for x in xs[: len(xs) - n_atoms]]
    table = getattr(f, "atom_values", None) or {}
    for a in mu.atoms:
        out.append(ctx.to_mp(table[a.x]) if a.x in table else f(ctx.to_mp(a.x)))
    return [ctx.mp.mpf(v) for v in out]


def expand_in_q(f, ws: WeightedSystem, N: int, ctx: PrecisionContext | None = None) -> Expansion:
    """Coefficients ``<f, q_n>`` for ``n <= N`` and residual norms
    ``r_n = ‖f - Σ_{m<=n} <f, q_m> q_m‖`` measured by direct integration."""
    ctx = ctx or ws.inner.ctx
    if N > ws.N:
        raise PreconditionError(f"system only has q_0..q_{ws.N}")
    mp = ctx.mp
    degree = 2 * (N + ws.t.degree) + _degree_hint(f) + 2
    xs, wts = ws.mu.discretize(ctx, degree)
    fv = _node_values(f, ws.mu, ctx, xs)
    qv = [ws.q_values(N, x) for x in xs]
    coeffs, residuals = [], []
    err = list(fv)
    for n in range(N + 1):
        c = mp.fsum(w * u * q[n] for w, u, q in zip(wts, fv, qv))
        coeffs.append(c)
        err = [e - c * q[n] for e, q in zip(err, qv)]
        residuals.append(mp.sqrt(mp.fsum(w * e * e for w, e in zip(wts, err))))
    return Expansion(tuple(coeffs), tuple(residuals))


def q_gram_defect(ws: WeightedSystem, N: int | None = None):
    """``max |<q_m, q_n>_{L²(μ)} - δ_mn|`` by direct quadrature against μ."""
    N = ws.N if N is None else N
    ctx = ws.inner.ctx
    mp = ctx.mp
    xs, wts = ws.mu.discretize(ctx, 2 * (N + ws.t.degree) + 2)
    qv = [ws.q_values(N, x) for x in xs]
    worst = mp.zero
    for m in range(N + 1):
        for n in range(m + 1):
            g = mp.fsum(w * q[m] * q[n] for w, q in zip(wts, qv))
            worst = max(worst, abs(g - (1 if m == n else 0)))
    return worst


@dataclass(frozen=True)
class CounterexampleResult:
    d_t: object
    d_1: object
    d1_sq: object


def counterexample_demo(w, ctx: PrecisionContext) -> CounterexampleResult:
    """Mass point at a zero of ``t`` breaks ``f ↦ t f``.

    With μ = uniform[0,2] + w·δ_1 and t(x) = x - 1, the functions
    ``f_1 = 1/(x-1)`` and ``f_2 = (1 - χ_{1})/(x-1)`` coincide in ``L²(t²μ)``
    while ``t f_1 - t f_2 = χ_{1}`` has squared ``L²(μ)`` norm ``w``.
    """
    w = to_fraction(w)
    if w <= 0:
        raise PreconditionError("w must be positive")
    one = Fraction(1)
    mu = uniform(0, 2, atoms=[Atom(one, w)])
    t = TFactor(-1, 0, (one,))
    # t^2 μ: the atom at 1 receives weight t(1)^2 w = 0 and disappears
    nu_atoms = tuple(Atom(a.x, a.w * t(a.x) ** 2) for a in mu.atoms if t(a.x) != 0)
    c = mu.continuous
    nu = Measure(Continuous(c.a, c.b, BinOp("*", c.density, Pow(t.expr(), 2))), nu_atoms)

    def f1(x):
        return 1 / (x - 1)

    def f2(x):
        return (1 - (x == 1)) / (x - 1)

    diff_t = lambda x: (f1(x) - f2(x)) ** 2
    d_t_sq = integrate(nu, diff_t, ctx, 4)
    # t f_1 ≡ 1 and t f_2 = 1 - χ_{1}; only the atom tells them apart
    diff_1 = AtomValued(lambda x: (t(x) * f1(x) - t(x) * f2(x)) ** 2, {one: (1 - 0) ** 2})
    d1_sq = integrate(mu, diff_1, ctx, 4)
    return CounterexampleResult(ctx.mp.sqrt(d_t_sq), ctx.mp.sqrt(d1_sq), d1_sq)
