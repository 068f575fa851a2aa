"""Exception types raised by the workbench."""


class RankOneLabError(Exception):
    """Base class for all errors raised by :mod:`rank_one_lab`."""


class InvariantError(RankOneLabError, ValueError):
    """A value violates the invariant of the type it is being wrapped in."""


class DecompositionError(RankOneLabError):
    """The eigensolver failed or produced residuals above tolerance."""


class PoleError(RankOneLabError, ZeroDivisionError):
    """A transform was evaluated on (or numerically at) one of its poles."""


class PreconditionError(RankOneLabError, ValueError):
    """A hypothesis required by the operation does not hold for the input."""


class RepresentationError(PreconditionError):
    """The spectral representation is ill-conditioned (vanishing coupling)."""


class RootFindingError(RankOneLabError):
    """A root finder could not isolate the expected number of roots."""


class DegenerateElementError(RankOneLabError):
    """A construction collapsed to the zero element."""


class VerificationError(RankOneLabError):
    """A computed object failed its built-in identity check."""
