"""Exception types shared across the package."""


class GmlError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(GmlError):
    """Operands live in incompatible dimensions."""


class CommutationViolation(GmlError):
    """A pairwise commutator norm exceeds the allowed tolerance."""


class ConvergenceFailure(GmlError):
    """An iterative routine could not certify its result."""


class NonPositiveEpsilon(GmlError):
    """A perturbation step size must be strictly positive."""


class BetaOutsideSubalgebra(GmlError):
    """A direction vector does not lie in the model's acting subalgebra."""


class DependentBasis(GmlError):
    """Vectors expected to form a basis are linearly dependent or do not span."""


class ExhaustedRetries(GmlError):
    """A bounded retry loop ran out of attempts."""


class StepTooLarge(GmlError):
    """An integration step moved so far off the sphere that results are untrustworthy."""


class HorizonExceeded(GmlError):
    """Integration hit the time cap before the field norm dropped below tolerance."""

    def __init__(self, message: str, t_final: float | None = None, residual: float | None = None):
        super().__init__(message)
        self.t_final = t_final
        self.residual = residual


class NotAFixedPoint(GmlError):
    """Linearization was requested at a point where the field does not vanish."""


class ModelParseError(GmlError):
    """A model file is malformed; the message carries line/field diagnostics."""


class UnknownCampaign(GmlError):
    """The requested verification campaign name is not recognized."""


class ReportIoError(GmlError):
    """A verification report could not be written."""
