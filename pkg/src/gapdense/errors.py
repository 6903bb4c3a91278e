"""Exception hierarchy shared by every module."""


class GapdenseError(Exception):
    """Base class for all errors raised by gapdense."""


class PrecisionExhausted(GapdenseError):
    """A factorization lost all significant bits at the working precision."""


class AtomAtZeroOfT(GapdenseError):
    """The measure has a mass point where the weight factor vanishes."""


class DensitySyntaxError(GapdenseError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifier(GapdenseError):
    def __init__(self, name, offset):
        super().__init__(f"unknown identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


class QuadratureNotConverged(GapdenseError):
    pass


class NegativeDensity(GapdenseError):
    pass


class NonFiniteValue(GapdenseError):
    pass


class DivisionByNegligible(GapdenseError):
    pass


class BracketingFailure(GapdenseError):
    pass


class PreconditionError(GapdenseError, ValueError):
    """An operation was called outside its documented domain."""
