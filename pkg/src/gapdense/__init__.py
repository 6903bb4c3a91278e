"""High-precision experiments on polynomial density in weighted L² spaces.

Orthonormal systems from moments, best approximation from gap spans
``span{x^j, ..., x^N}``, weighted systems ``q_n = t p_{n,t}`` and the
point-evaluation Sobolev construction.
"""

__version__ = "0.1.0"

from .errors import AtomAtZeroOfT, GapdenseError, PrecisionExhausted  # noqa: E402
from .scalars import PrecisionContext, required_bits  # noqa: E402

__all__ = ["AtomAtZeroOfT", "GapdenseError", "PrecisionContext", "PrecisionExhausted", "required_bits"]
