"""Finite positive measures on the line: an optional density on a compact
interval plus finitely many atoms.

The continuous part is integrated with a composite Gauss-Legendre rule that is
refined by panel doubling until the requested moments stabilize.  Atoms are
kept apart from the rule and summed exactly at their locations.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping

from .errors import (
    AtomAtZeroOfT,
    NegativeDensity,
    NonFiniteValue,
    PreconditionError,
    QuadratureNotConverged,
)
from .expr import BinOp, Expr, Pow, parse_density
from .scalars import PrecisionContext, _mp_context, to_fraction

# Bisection depth is bounded by the mantissa width; total panels by this cap.
MAX_PANELS = 4096
DEFAULT_DEGREE = 64


@dataclass(frozen=True)
class Atom:
    x: Fraction
    w: Fraction

    def __post_init__(self):
        object.__setattr__(self, "x", to_fraction(self.x))
        object.__setattr__(self, "w", to_fraction(self.w))
        if self.w <= 0:
            raise PreconditionError(f"atom weight must be positive, got {self.w}")


@dataclass(frozen=True)
class Continuous:
    a: Fraction
    b: Fraction
    density: Expr

    def __post_init__(self):
        object.__setattr__(self, "a", to_fraction(self.a))
        object.__setattr__(self, "b", to_fraction(self.b))
        if isinstance(self.density, str):
            object.__setattr__(self, "density", parse_density(self.density))
        if not self.a < self.b:
            raise PreconditionError(f"support [{self.a}, {self.b}] is empty")


@dataclass(frozen=True)
class Measure:
    continuous: Continuous | None = None
    atoms: tuple[Atom, ...] = ()
    # canonical density text for serialization; not part of identity
    density_text: str | None = field(default=None, compare=False)

    def __post_init__(self):
        atoms = tuple(a if isinstance(a, Atom) else Atom(*a) for a in self.atoms)
        object.__setattr__(self, "atoms", tuple(sorted(atoms, key=lambda a: a.x)))
        if self.continuous is None and not self.atoms:
            raise PreconditionError("measure needs a continuous part or at least one atom")
        xs = [a.x for a in self.atoms]
        if len(set(xs)) != len(xs):
            raise PreconditionError("atom locations must be pairwise distinct")

    @property
    def infinite_support(self) -> bool:
        return self.continuous is not None

    def atom_at(self, x) -> Atom | None:
        x = to_fraction(x)
        for a in self.atoms:
            if a.x == x:
                return a
        return None

    def hull(self) -> tuple[Fraction, Fraction]:
        pts = [a.x for a in self.atoms]
        if self.continuous is not None:
            pts += [self.continuous.a, self.continuous.b]
        return min(pts), max(pts)

    def total_mass(self, ctx: PrecisionContext):
        return moments(self, 0, ctx)[0]

    def rule(self, ctx: PrecisionContext, nmax: int = DEFAULT_DEGREE) -> "QuadratureRule | None":
        if self.continuous is None:
            return None
        return build_quadrature(self.continuous, ctx, nmax)

    def discretize(self, ctx: PrecisionContext, nmax: int = DEFAULT_DEGREE):
        """Nodes and weights of the quadrature rule followed by the atoms."""
        xs, ws = [], []
        rule = self.rule(ctx, nmax)
        if rule is not None:
            xs += list(rule.nodes)
            ws += list(rule.weights)
        for a in self.atoms:
            xs.append(ctx.to_mp(a.x))
            ws.append(ctx.to_mp(a.w))
        return xs, ws


def uniform(a=0, b=1, atoms=()) -> Measure:
    """Lebesgue measure on [a, b] (density 1), plus optional atoms."""
    return Measure(Continuous(a, b, parse_density("1")), tuple(atoms), density_text="1")


@dataclass(frozen=True)
class QuadratureRule:
    nodes: tuple
    weights: tuple
    level: int
    points_per_panel: int


@lru_cache(maxsize=None)
def _legendre(m: int, bits: int):
    """Gauss-Legendre nodes/weights on [-1, 1], rounded to ``bits``."""
    mp = _mp_context(bits + 24)
    tol = mp.ldexp(1, -(bits + 16))
    half = []
    for i in range(m // 2):
        x = mp.cos(mp.pi * (i + mp.mpf(0.75)) / (m + mp.mpf(0.5)))
        for _ in range(200):
            p0, p1 = mp.one, x
            for k in range(2, m + 1):
                p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
            dp = m * (x * p1 - p0) / (x * x - 1)
            dx = p1 / dp
            x -= dx
            if abs(dx) < tol:
                break
        else:
            raise QuadratureNotConverged(f"Legendre Newton iteration stalled (m={m})")
        w = 2 / ((1 - x * x) * dp * dp)
        half.append((x, w))
    out = _mp_context(bits)
    pts = [(-x, w) for x, w in half]
    if m % 2:
        # P_m'(0) = m P_{m-1}(0)
        pts.append((mp.zero, 2 / (m * _p_at_zero(mp, m - 1)) ** 2))
    pts += [(x, w) for x, w in reversed(half)]
    return tuple(out.mpf(x) for x, _ in pts), tuple(out.mpf(w) for _, w in pts)


def _p_at_zero(mp, n):
    if n % 2:
        return mp.zero
    v = mp.one
    for k in range(2, n + 1, 2):
        v = -v * (k - 1) / k
    return v


def _points_per_panel(density: Expr, nmax: int) -> int:
    d = density.poly()
    extra = len(d) - 1 if d is not None else 8
    m = max(8, (nmax + extra) // 2 + 2)
    return m + (m % 2)


def _panel(cont: Continuous, ctx: PrecisionContext, lo, hi, xi, wi):
    """Gauss-Legendre nodes on ``[lo, hi]`` with the density folded into the weights."""
    mp = ctx.mp
    mid, half = (lo + hi) / 2, (hi - lo) / 2
    nodes, weights = [], []
    for x, w in zip(xi, wi):
        node = mid + half * x
        dens = cont.density.evaluate(node, mp)
        if not mp.isfinite(dens):
            raise NonFiniteValue(f"density is not finite at x={node}")
        if dens < 0:
            raise NegativeDensity(f"density {dens} < 0 at x={mp.nstr(node, 20)}")
        if dens > 0:
            nodes.append(node)
            weights.append(half * w * dens)
    return nodes, weights


def _raw_moments(nodes, weights, N, mp):
    out = [mp.zero] * (N + 1)
    scale = [mp.zero] * (N + 1)
    for x, w in zip(nodes, weights):
        v = w
        for k in range(N + 1):
            out[k] += v
            scale[k] += abs(v)
            v *= x
    return out, scale


@lru_cache(maxsize=256)
def _stabilized(cont: Continuous, ctx: PrecisionContext, nmax: int, max_levels: int | None):
    mp = ctx.mp
    m = _points_per_panel(cont.density, nmax)
    xi, wi = _legendre(m, ctx.mantissa_bits)
    depth_cap = ctx.mantissa_bits if max_levels is None else max_levels
    a, b = ctx.to_mp(cont.a), ctx.to_mp(cont.b)
    whole = _panel(cont, ctx, a, b, xi, wi)
    mom, scale = _raw_moments(*whole, nmax, mp)
    tol = [ctx.rel_tol * s for s in scale]
    accepted = []
    work = [(a, b, 0, mom)]
    deepest = 0
    while work:
        lo, hi, depth, coarse = work.pop()
        mid = (lo + hi) / 2
        left = _panel(cont, ctx, lo, mid, xi, wi)
        right = _panel(cont, ctx, mid, hi, xi, wi)
        ml, _ = _raw_moments(*left, nmax, mp)
        mr, _ = _raw_moments(*right, nmax, mp)
        if all(abs(c - (u + v)) <= t for c, u, v, t in zip(coarse, ml, mr, tol)):
            accepted += [(lo, left), (mid, right)]
            deepest = max(deepest, depth + 1)
            continue
        if depth + 1 >= depth_cap or len(accepted) + len(work) + 2 > MAX_PANELS:
            raise QuadratureNotConverged(
                f"moments up to degree {nmax} did not stabilize near x={mp.nstr(lo, 10)} "
                f"(depth {depth + 1}, {len(accepted) + len(work)} panels)"
            )
        work.append((mid, hi, depth + 1, mr))
        work.append((lo, mid, depth + 1, ml))
    accepted.sort(key=lambda item: item[0])
    nodes = tuple(x for _, (xs, _) in accepted for x in xs)
    weights = tuple(w for _, (_, ws) in accepted for w in ws)
    return QuadratureRule(nodes, weights, deepest, m)


def build_quadrature(
    cont: Continuous, ctx: PrecisionContext, nmax: int = DEFAULT_DEGREE, max_levels: int | None = None
) -> QuadratureRule:
    """Composite Gauss-Legendre rule for ``cont`` stabilized on moments 0..nmax.

    Starting from the whole interval, a panel is bisected until its moments
    and the sum of its two halves' moments agree within ``rel_tol`` times the
    absolute-value scale of the full integral; the halves are then kept.
    Refinement is local, so the mesh grades toward endpoint singularities.
    ``max_levels`` bounds the bisection depth (default: the mantissa width).
    """
    return _stabilized(cont, ctx, max(nmax, 0), max_levels)


def moments(mu: Measure, N: int, ctx: PrecisionContext) -> list:
    """``m_k = ∫ x^k dμ`` for k = 0..N at the precision of ``ctx``."""
    if N < 0:
        raise PreconditionError("N must be >= 0")
    mp = ctx.mp
    if mu.continuous is not None:
        rule = build_quadrature(mu.continuous, ctx, N)
        out, _ = _raw_moments(rule.nodes, rule.weights, N, mp)
    else:
        out = [mp.zero] * (N + 1)
    for a in mu.atoms:
        x, v = ctx.to_mp(a.x), ctx.to_mp(a.w)
        for k in range(N + 1):
            out[k] += v
            v *= x
    return out


def exact_moments(mu: Measure, N: int) -> list[Fraction] | None:
    """Exact rational moments when the density is a rational polynomial."""
    out = [Fraction(0)] * (N + 1)
    if mu.continuous is not None:
        d = mu.continuous.density.poly()
        if d is None:
            return None
        a, b = mu.continuous.a, mu.continuous.b
        for k in range(N + 1):
            out[k] = sum(
                (c * (b ** (k + i + 1) - a ** (k + i + 1)) / (k + i + 1) for i, c in enumerate(d) if c),
                Fraction(0),
            )
    for at in mu.atoms:
        for k in range(N + 1):
            out[k] += at.w * at.x**k
    return out


def weighted_measure(mu: Measure, t) -> Measure:
    """``dν = t(x)^2 dμ(x)``; ``t`` must evaluate exactly on rationals and expose ``expr()``."""
    atoms = []
    for a in mu.atoms:
        v = t(a.x)
        if v == 0:
            raise AtomAtZeroOfT(f"μ has an atom at x={a.x}, a zero of t")
        atoms.append(Atom(a.x, a.w * v * v))
    cont = None
    if mu.continuous is not None:
        c = mu.continuous
        cont = Continuous(c.a, c.b, BinOp("*", c.density, Pow(t.expr(), 2)))
    return Measure(cont, tuple(atoms))


class AtomValued:
    """An evaluable with explicit values at chosen atom locations.

    Quadrature nodes use ``fn``; an atom located at a key of ``atom_values``
    uses the tabulated value instead.
    """

    def __init__(self, fn: Callable, atom_values: Mapping):
        self.fn = fn
        self.atom_values = {to_fraction(k): v for k, v in atom_values.items()}

    def __call__(self, x):
        return self.fn(x)


def _at_atom(f, atom: Atom, ctx: PrecisionContext):
    table = getattr(f, "atom_values", None)
    if table and atom.x in table:
        return ctx.to_mp(table[atom.x])
    return f(ctx.to_mp(atom.x))


def integrate(mu: Measure, f, ctx: PrecisionContext, degree: int = DEFAULT_DEGREE):
    """``∫ f dμ``: quadrature sum over the continuous part plus the atom sum.

    ``degree`` selects the rule: it is stabilized on moments up to that order.
    """
    mp = ctx.mp
    total = mp.zero
    if mu.continuous is not None:
        rule = build_quadrature(mu.continuous, ctx, degree)
        for x, w in zip(rule.nodes, rule.weights):
            v = mp.mpf(f(x))
            if not mp.isfinite(v):
                raise NonFiniteValue(f"integrand not finite at x={mp.nstr(x, 20)}")
            total += w * v
    for a in mu.atoms:
        v = mp.mpf(_at_atom(f, a, ctx))
        if not mp.isfinite(v):
            raise NonFiniteValue(f"integrand not finite at atom x={a.x}")
        total += ctx.to_mp(a.w) * v
    return total


# --- JSON ------------------------------------------------------------------

_TOP_KEYS = {"continuous", "atoms"}


def _real(v, where):
    if isinstance(v, bool) or not isinstance(v, (str, int)):
        raise PreconditionError(f"{where}: reals must be decimal strings, got {v!r}")
    try:
        return Fraction(v.strip()) if isinstance(v, str) else Fraction(v)
    except (ValueError, ZeroDivisionError):
        raise PreconditionError(f"{where}: not a decimal number: {v!r}") from None


def measure_from_json(obj) -> Measure:
    if not isinstance(obj, dict) or set(obj) != _TOP_KEYS:
        raise PreconditionError(f"measure must have exactly the keys {sorted(_TOP_KEYS)}")
    cont = None
    text = None
    c = obj["continuous"]
    if c is not None:
        if not isinstance(c, dict) or set(c) != {"support", "density"}:
            raise PreconditionError("continuous must have exactly the keys ['density', 'support']")
        sup = c["support"]
        if not isinstance(sup, list) or len(sup) != 2:
            raise PreconditionError("support must be a two-element list")
        if not isinstance(c["density"], str):
            raise PreconditionError("density must be an expression string")
        text = c["density"]
        cont = Continuous(_real(sup[0], "support"), _real(sup[1], "support"), parse_density(text))
    if not isinstance(obj["atoms"], list):
        raise PreconditionError("atoms must be a list")
    atoms = []
    for i, a in enumerate(obj["atoms"]):
        if not isinstance(a, dict) or set(a) != {"x", "w"}:
            raise PreconditionError(f"atoms[{i}] must have exactly the keys ['w', 'x']")
        atoms.append(Atom(_real(a["x"], f"atoms[{i}].x"), _real(a["w"], f"atoms[{i}].w")))
    return Measure(cont, tuple(atoms), density_text=text)


def load_measure(path) -> Measure:
    with open(path, encoding="utf-8") as fh:
        return measure_from_json(json.load(fh))


def _dec(q: Fraction) -> str:
    """Exact decimal string when one exists, otherwise ``p/q``."""
    den = q.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{q.numerator}/{q.denominator}"
    digits = max(twos, fives)
    scaled = q * 10**digits
    s = str(abs(scaled.numerator)).rjust(digits + 1, "0")
    body = s if digits == 0 else f"{s[:-digits]}.{s[-digits:]}".rstrip("0").rstrip(".")
    return ("-" if q < 0 else "") + body


def measure_to_json(mu: Measure) -> dict:
    cont = None
    if mu.continuous is not None:
        cont = {
            "support": [_dec(mu.continuous.a), _dec(mu.continuous.b)],
            "density": mu.density_text if mu.density_text is not None else str(mu.continuous.density),
        }
    return {"continuous": cont, "atoms": [{"x": _dec(a.x), "w": _dec(a.w)} for a in mu.atoms]}


def measure_hash(mu: Measure) -> str:
    blob = json.dumps(measure_to_json(mu), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
