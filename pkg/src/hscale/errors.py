"""Exception hierarchy shared by all hscale modules."""


class HScaleError(Exception):
    """Base class for hscale errors."""


class DomainError(HScaleError, ValueError):
    """A function parameter was evaluated outside its domain."""


class ParseError(HScaleError, ValueError):
    """Malformed prefix expression or system description."""


class EstimationError(HScaleError):
    """Windowed index estimation did not converge."""


class InvalidSetupError(HScaleError, ValueError):
    """Interpolation setup violates the two-sided index condition."""


class PreconditionError(HScaleError, ValueError):
    """A windowed precondition (boundedness, class B membership) failed."""


class QuadratureError(HScaleError):
    """Quadrature failed (overflow, non-finite integrand)."""


class NotEllipticError(HScaleError):
    """The principal symbol degenerates somewhere on the unit sphere."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class SingularSymbolError(HScaleError):
    """A symbol matrix is singular where it must be invertible."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class UnboundedSymbolError(HScaleError):
    """Boundedness certificate keeps growing with the truncation."""


class HomogeneityError(HScaleError, ValueError):
    """Principal part is not positively homogeneous of the declared degree."""


class NumericalOverflowError(HScaleError, OverflowError):
    """A weighted sum left the double-precision range."""
