"""Exception types raised by the toolkit."""


class WebSplineError(Exception):
    """Base class for all errors raised by the package."""


class DegenerateDomain(WebSplineError):
    """No grid cell lies completely inside the domain (grid too coarse)."""


class NoInnerArray(WebSplineError):
    """No full ``n^m`` array of inner indices exists for an outer index."""


class UnsupportedBoundary(WebSplineError):
    """A Dirichlet boundary primitive has no weight-function factor."""


class UnparameterizedBoundary(WebSplineError):
    """A boundary part cannot be integrated over (no parameterization)."""


class EmptyBasis(WebSplineError):
    pass


class QuadratureFailure(WebSplineError):
    pass


class UnknownKind(WebSplineError):
    pass


class ProjectionSingular(WebSplineError):
    pass


class ConfigError(WebSplineError):
    pass


class SolverError(WebSplineError):
    """Base class for linear-solver failures; carries the best iterate."""

    def __init__(self, message, x=None, report=None):
        super().__init__(message)
        self.x = x
        self.report = report


class MaxIterExceeded(SolverError):
    pass


class NotSymmetric(SolverError):
    pass


class NotPositiveDefinite(SolverError):
    pass


class SingularSystem(SolverError):
    pass


class SecondDerivativeUnavailable(WebSplineError):
    """The strong residual needs splines of order 3 or higher."""
