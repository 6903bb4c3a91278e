"""Dense monomial-basis polynomials over exact or big-float coefficients."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence


class Polynomial:
    """Immutable polynomial ``c_0 + c_1 x + ... + c_d x^d``.

    Coefficients may be ``int``/``Fraction`` (exact plane) or mpmath numbers of
    one context.  Arithmetic between exact polynomials stays exact.
    """

    __slots__ = ("coeffs", "_cache")

    def __init__(self, coeffs: Sequence):
        c = list(coeffs) or [Fraction(0)]
        if all(isinstance(v, (int, Fraction)) for v in c):
            c = [Fraction(v) for v in c]
        else:
            zero = next(v for v in c if not isinstance(v, (int, Fraction))) * 0
            c = [zero + v if isinstance(v, (int, Fraction)) else v for v in c]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))
        object.__setattr__(self, "_cache", {})

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    @classmethod
    def monomial(cls, k: int, coeff=Fraction(1)) -> "Polynomial":
        return cls([Fraction(0)] * k + [coeff])

    @property
    def degree(self) -> int:
        """Degree; the zero polynomial reports -1."""
        if len(self.coeffs) == 1 and self.coeffs[0] == 0:
            return -1
        return len(self.coeffs) - 1

    @property
    def is_exact(self) -> bool:
        return all(isinstance(c, Fraction) for c in self.coeffs)

    def coeff(self, k: int):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else self.coeffs[0] * 0

    def in_context(self, mp) -> tuple:
        """Coefficients rounded into mpmath context ``mp`` (memoized)."""
        key = id(mp)
        hit = self._cache.get(key)
        if hit is None:
            hit = tuple(_to(mp, c) for c in self.coeffs)
            self._cache[key] = hit
        return hit

    def __call__(self, x):
        if isinstance(x, (int, Fraction)) and self.is_exact:
            acc = Fraction(0)
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        mp = x.context if hasattr(x, "context") else None
        if mp is None:
            raise TypeError("evaluate inexact polynomials at big-float arguments")
        acc = mp.zero
        for c in reversed(self.in_context(mp)):
            acc = acc * x + c
        return acc

    def evaluate(self, x, mp):
        return self(mp.mpf(x))

    def derivative(self, j: int = 1) -> "Polynomial":
        c = list(self.coeffs)
        for _ in range(j):
            c = [k * c[k] for k in range(1, len(c))]
        return Polynomial(c)

    def derivative_at_zero(self, j: int):
        """``p^{(j)}(0) = j! c_j``."""
        return math.factorial(j) * self.coeff(j)

    def shift(self, k: int) -> "Polynomial":
        """Multiply by ``x^k``."""
        if self.degree < 0:
            return self
        return Polynomial([self.coeffs[0] * 0] * k + list(self.coeffs))

    def scale(self, s) -> "Polynomial":
        return Polynomial([s * c for c in self.coeffs])

    def map(self, fn) -> "Polynomial":
        return Polynomial([fn(c) for c in self.coeffs])

    def __add__(self, other):
        other = _coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return Polynomial([self.coeff(k) + other.coeff(k) for k in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return Polynomial([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        a, b = self.coeffs, other.coeffs
        out = [a[0] * 0] * (len(a) + len(b) - 1)
        for i, u in enumerate(a):
            if u == 0:
                continue
            for j, v in enumerate(b):
                out[i + j] = out[i + j] + u * v
        return Polynomial(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"Polynomial({list(self.coeffs)!r})"


def _to(mp, c):
    if isinstance(c, Fraction):
        if c.denominator == 1:
            return mp.mpf(c.numerator)
        return mp.mpf(c.numerator) / c.denominator
    return mp.mpf(c)


def _coerce(v) -> Polynomial:
    return v if isinstance(v, Polynomial) else Polynomial([v])
