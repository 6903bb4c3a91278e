"""Working-precision contexts and the exact rational plane.

Big-float arithmetic is delegated to private ``mpmath.MPContext`` instances,
one per precision, so that no global precision state is ever touched.
Exact arithmetic uses :class:`fractions.Fraction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath

Rational = Fraction

# Slack on top of the per-degree digit loss when factorizing Hankel matrices.
HANKEL_GUARD_SLACK = 32


def required_bits(max_degree: int) -> int:
    """Minimum mantissa width for Hankel factorizations up to ``max_degree``."""
    if max_degree < 1:
        raise ValueError("max_degree must be >= 1")
    return math.ceil(5.1 * max_degree) + 100


def hankel_loss_bits(order: int) -> int:
    """Bits lost to conditioning in an order-``order`` Hankel factorization."""
    return math.ceil(5.1 * max(order, 1)) + HANKEL_GUARD_SLACK


@lru_cache(maxsize=None)
def _mp_context(bits: int) -> mpmath.MPContext:
    mp = mpmath.MPContext()
    mp.prec = bits
    return mp


@dataclass(frozen=True)
class PrecisionContext:
    """Mantissa width plus the generic relative tolerance used at that width.

    ``rel_tol`` defaults to ``2**(-mantissa_bits // 2)``.
    """

    mantissa_bits: int
    rel_tol: float | None = None

    def __post_init__(self):
        if self.mantissa_bits < 64:
            raise ValueError("mantissa_bits must be >= 64")
        if self.rel_tol is None:
            object.__setattr__(self, "rel_tol", self.mp.ldexp(1, -(self.mantissa_bits // 2)))
        else:
            object.__setattr__(self, "rel_tol", self.mp.mpf(self.rel_tol))
        if self.rel_tol < self.mp.ldexp(1, 1 - self.mantissa_bits):
            raise ValueError("rel_tol below the unit roundoff of the context")

    @classmethod
    def for_degree(cls, max_degree: int) -> "PrecisionContext":
        return cls(required_bits(max(max_degree, 1)))

    @property
    def mp(self) -> mpmath.MPContext:
        return _mp_context(self.mantissa_bits)

    @property
    def eps(self):
        return self.mp.ldexp(1, 1 - self.mantissa_bits)

    @property
    def digits(self) -> int:
        """Significant decimal digits carried by the mantissa.

        Rounded down, so a printed value never shows a trailing digit that is
        pure rounding noise; decimal inputs such as ``0.3`` print back as is.
        """
        return int((self.mantissa_bits - 1) * math.log10(2))

    def guarded(self, extra_bits: int) -> "PrecisionContext":
        """A wider context whose results are meant to be rounded back to this one."""
        bits = self.mantissa_bits + extra_bits
        mp = _mp_context(bits)
        return PrecisionContext(bits, mp.ldexp(1, 20 - bits))

    def to_mp(self, value):
        """Round ``value`` (int, Fraction, decimal string, or mpf) into this context."""
        mp = self.mp
        if isinstance(value, Fraction):
            if value.denominator == 1:
                return mp.mpf(value.numerator)
            # correctly rounded quotient of two exact integers
            return mp.mpf(value.numerator) / value.denominator
        return mp.mpf(value)

    def fmt(self, value) -> str:
        """Deterministic decimal rendering at full working precision."""
        mp = self.mp
        x = self.to_mp(value)
        if x == 0:
            return "0"
        return mp.nstr(x, self.digits, strip_zeros=True, min_fixed=-4, max_fixed=self.digits)


def to_fraction(x) -> Fraction:
    """Exact rational value of an int, decimal string, Fraction or binary big-float."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        return Fraction(x)
    sign, man, exp, _ = x._mpf_
    if not man and exp:
        raise ValueError(f"non-finite value {x}")
    v = Fraction(int(man)) * (Fraction(2) ** int(exp))
    return -v if sign else v
