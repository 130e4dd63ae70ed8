"""Exception types shared across the toolkit."""


class MatchctlError(Exception):
    """Base class for all toolkit errors."""


class SingularMetric(MatchctlError):
    """Metric determinant fell below the declared margin."""


class InvalidParameters(MatchctlError):
    """Physical or controller parameters violate their constraints."""


class DegenerateModelMetric(MatchctlError):
    """Model mass matrix is degenerate at the requested configuration."""


class QuadratureFailure(MatchctlError):
    """Adaptive quadrature could not reach the requested tolerance."""


class CharacteristicEscape(MatchctlError):
    """A backward characteristic leaves the valid angular range."""


class NotControllable(MatchctlError):
    """Linearized pair (A, B) is not controllable."""


class ComplexPolesNotConjugate(MatchctlError):
    """Requested complex poles do not come in conjugate pairs."""


class NonFiniteState(MatchctlError):
    """Integration was started from a non-finite state."""


class PastBlowup(MatchctlError):
    """Requested time is at or beyond the blow-up time."""
