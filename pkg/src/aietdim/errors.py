"""Exception hierarchy shared across the package."""


class AietdimError(Exception):
    """Base class for all domain errors raised by this package."""


class NotRenormalizable(AietdimError):
    """Induction is undefined: the two candidate intervals have equal length.

    For exact-rational IETs a tie signals a Keane-condition failure at the
    current step; ties are never resolved by convention.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class TieUndecidable(AietdimError):
    """AIET induction cannot decide the type within working precision."""

    def __init__(self, message, lower=None, upper=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class ResourceGuardExceeded(AietdimError):
    """A configurable resource cap (matrix size, class size, iterations) tripped."""


class PrecisionExhausted(AietdimError):
    """High-precision computation can no longer certify its output."""


class ConeNotContracted(AietdimError):
    """Cocycle matrices have not contracted the positive cone enough.

    Raised by measure estimation when the column directions still disagree
    beyond the requested tolerance; a longer orbit is needed.
    """
