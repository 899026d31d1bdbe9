"""Exception hierarchy shared by every llab module."""


class LlabError(Exception):
    """Base class for all llab errors."""


class ValidationError(LlabError, ValueError):
    """Bad user input detected before any computation."""


class InvalidDimension(ValidationError):
    pass


class InvalidResolution(ValidationError):
    pass


class InvalidParameters(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class NegativeConstant(ValidationError):
    pass


class SiteCountMismatch(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class ScaleExceedsDomain(ValidationError):
    """Counting scale is larger than the torus (R0 * sqrt(mu) < 1)."""


class CubeUnresolvable(ValidationError):
    """Requested cube is finer than one grid cell or wraps onto itself."""


class ConditionViolated(ValidationError):
    pass


class EmptySpectrum(ValidationError):
    pass


class InsufficientMinima(ValidationError):
    pass


class NonPositiveLandscape(ValidationError):
    pass


class NonPositiveCurve(ValidationError):
    pass


class TooLargeForDense(ValidationError):
    pass


class NumericalError(LlabError, ArithmeticError):
    """Solver-level failure."""


class SingularOperator(NumericalError):
    pass


class NotConverged(NumericalError):
    pass


class NoFiniteConstant(NumericalError):
    pass


class FieldIOError(LlabError, OSError):
    pass


class FormatError(FieldIOError):
    pass


class ChecksumMismatch(FieldIOError):
    pass
