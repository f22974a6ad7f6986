"""Exception hierarchy shared across the package."""


class OptDesignError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(OptDesignError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DimensionMismatch(OptDesignError, ValueError):
    """Shapes or index universes of two objects do not line up."""


class RankDeficientData(OptDesignError):
    """The point set does not span the ambient space."""


class SubsetRankDeficient(RankDeficientData):
    """A working subset of points does not span the ambient space."""


class SingularInformation(OptDesignError):
    """An information matrix is numerically singular."""


class SingularAfterSwap(SingularInformation):
    """A requested exchange would make the information matrix singular."""


class NewtonStalled(OptDesignError):
    """The interior-point solver hit its iteration cap before certifying.

    Carries the best iterate found so that callers may continue with it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InfeasibleRounding(OptDesignError):
    """No nonsingular integer design exists under the requested rounding."""


class DegenerateCoordinate(OptDesignError):
    """A data coordinate has (numerically) zero variance."""


class ParseError(OptDesignError, ValueError):
    """A dataset file could not be parsed; the message names the location."""


class TooLarge(OptDesignError):
    """An enumeration would exceed the configured size guard."""
