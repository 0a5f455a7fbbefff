"""Exception hierarchy shared by all gaussrenyi modules."""


class GaussRenyiError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(GaussRenyiError, ValueError):
    """Matrix or vector shapes are inconsistent (odd, non-square, wrong length)."""


class AsymmetricInput(GaussRenyiError, ValueError):
    """A matrix that must be symmetric is not, beyond tolerance."""


class NotPositiveDefinite(GaussRenyiError, ValueError):
    pass


class NotLegitimate(GaussRenyiError, ValueError):
    """Covariance matrix violates the uncertainty principle V + i Omega >= 0."""


class NotFaithful(GaussRenyiError, ValueError):
    """Some symplectic eigenvalue is too close to 1 for the closed-form paths."""


class NumericalFailure(GaussRenyiError, ArithmeticError):
    pass


class RouteDisagreement(NumericalFailure):
    """Two independent evaluation routes of the same quantity disagree."""


class AlphaOutOfRange(GaussRenyiError, ValueError):
    pass


class FeasibilityViolated(GaussRenyiError, ValueError):
    """A difference matrix required to be positive definite is not.

    Attributes:
        margin: minimum eigenvalue of the offending difference matrix.
    """

    def __init__(self, message, margin=float("nan")):
        super().__init__(message)
        self.margin = margin


class BoundaryInconclusive(GaussRenyiError, ValueError):
    """Difference matrix is PSD but singular; no formula applies."""


class LimitUnstable(GaussRenyiError, ArithmeticError):
    pass


class CutoffTooSmall(GaussRenyiError, ValueError):
    pass


class TruncationInsufficient(GaussRenyiError, ValueError):
    pass


class SpectrumFloorHit(GaussRenyiError, ArithmeticError):
    """Truncated spectrum is too small for a reliable negative power."""


class ParseError(GaussRenyiError, ValueError):
    pass
