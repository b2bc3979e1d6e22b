"""Exception types shared across the simulator."""


class DivisibilityError(ValueError):
    """An array/chain partition does not divide evenly."""


class DimensionError(ValueError):
    """Stream / RF-chain / antenna counts are mutually inconsistent."""


class LengthMismatch(ValueError):
    """A sequence does not have the expected number of elements."""


class ShapeMismatch(ValueError):
    """Matrix operands have incompatible shapes."""


class ConvergenceFailure(RuntimeError):
    """An iterative kernel exceeded its iteration cap."""


class NotPositiveDefinite(ValueError):
    """A matrix required to be Hermitian positive definite is not."""


class DelayOutOfRange(ValueError):
    """A path delay lies outside the supported tap window."""


class UnsupportedResolution(ValueError):
    """ADC bit depth outside the supported 1..12 range."""


class GridTooSmall(ValueError):
    """Dictionary has fewer atoms than beams to select."""


class SingularNoise(ValueError):
    """Effective noise covariance is singular (cannot invert)."""
