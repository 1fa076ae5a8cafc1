"""Exception types shared across the package."""


class LtiparError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(LtiparError):
    """A matrix has inconsistent dimensions; the message names the offender."""


class NonFiniteError(LtiparError):
    """An input matrix contains NaN or infinite entries."""


class NonFiniteResultError(LtiparError):
    """A computation overflowed or otherwise produced non-finite values."""


class DegreeError(LtiparError):
    """A polynomial has an unusable degree for the requested operation."""


class RootConvergenceError(LtiparError):
    """The eigenvalue iteration failed to locate all polynomial roots."""


class UnpairedComplexRootError(LtiparError):
    """A complex root has no conjugate partner within tolerance."""


class SingularSystemError(LtiparError):
    """The residue-matching linear system is singular (spectrum mismatch)."""


class AcausalRuleError(LtiparError):
    """The derivative rule needs future samples and cannot be simulated."""


class NormalizationError(LtiparError):
    """A difference equation cannot be made explicit (leading coefficient ~ 0)."""


class SingularStepError(LtiparError):
    """The implicit per-step update matrix is singular for the chosen step."""


class EmptyModelError(LtiparError):
    """A parallel model with no channels cannot be simulated."""


class ShapeMismatchError(LtiparError):
    """Two traces disagree in sample count or signal dimensions."""


class DocumentError(LtiparError):
    """A model or plan document is malformed; the message names the field."""
