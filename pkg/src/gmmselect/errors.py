"""Exception types shared across the package.

The CLI maps these onto exit codes: validation problems exit 1, data and
file problems exit 2, numerical failures exit 3.
"""


class GmmSelectError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(GmmSelectError, ValueError):
    """A caller-supplied argument violates a documented precondition."""


class DataError(GmmSelectError):
    """A data file is missing, malformed, or fails its integrity checks."""


class NumericalError(GmmSelectError):
    """A numerical procedure failed (factorization, fit, sampling budget)."""


class DimensionMismatch(ValidationError):
    """Array shapes do not agree."""


class NotSymmetric(ValidationError):
    """Matrix asymmetry exceeds the relative tolerance."""


class NotSimplex(ValidationError):
    """Weight vector has negative entries or does not sum to one."""


class NonPositiveAlpha(ValidationError):
    """Dirichlet concentration parameters must be strictly positive."""


class DofTooSmall(ValidationError):
    """Wishart degrees of freedom at or below dimension minus one."""


class TooFewPoints(ValidationError):
    """Fewer observations than mixture components."""


class OutOfRange(ValidationError):
    """Integer argument outside its admissible range."""


class NotSpd(NumericalError):
    """Symmetric factorization hit a non-positive pivot."""


class AllRestartsFailed(NumericalError):
    """Every restart of an iterative fit failed numerically."""


class RejectionBudgetExceeded(NumericalError):
    """A rejection-sampling loop hit its redraw budget."""


class ParseError(DataError):
    """Malformed cell in a delimited file; carries 1-based row/col."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class RaggedRows(DataError):
    """Rows of a delimited file have inconsistent column counts."""


class NonFinite(DataError):
    """A data cell parsed to NaN or infinity."""


class UnknownDataset(DataError):
    """Requested built-in dataset name is not recognized."""


class CountMismatch(DataError):
    """A built-in dataset loaded with an unexpected number of values."""


class DatasetUnavailable(DataError):
    """A recognized built-in dataset has no vendored data file."""
