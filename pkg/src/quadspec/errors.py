"""Exception hierarchy for quadspec."""


class QuadSpecError(Exception):
    """Base class of all quadspec errors."""


class DimensionError(QuadSpecError, ValueError):
    """Raised when array shapes or phase-space dimensions do not agree."""


class HypothesisError(QuadSpecError):
    """Raised when a form does not satisfy the assumptions a result needs.

    Examples are a real part that is not non-positive, a singular space
    that is not symplectic, or a form that is not elliptic on it.
    """


class PreconditionError(QuadSpecError, ValueError):
    """Raised when an operation is called outside of its domain."""


class ConvergenceError(QuadSpecError):
    """Raised when a quadrature or truncation check does not converge."""


class EnumerationError(QuadSpecError):
    """Raised when lattice enumeration would visit too many nodes."""
