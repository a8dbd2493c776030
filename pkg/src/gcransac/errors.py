"""Exception hierarchy shared by every module of the package."""


class GCRansacError(Exception):
    """Base class for all errors raised by gcransac."""


class InvalidInputError(GCRansacError, ValueError):
    """Shapes, dimensions or parameter values that violate a precondition."""


class SingularModelError(GCRansacError):
    """A model cannot be evaluated, e.g. inverting a near-singular homography."""


class DegenerateSampleError(GCRansacError):
    """A point configuration does not determine a unique model."""


class InsufficientDataError(GCRansacError):
    """Fewer usable points than the model's minimal sample size."""


class ContractViolationError(GCRansacError):
    """A caller broke an API contract, e.g. a non-submodular pairwise term."""


class OracleScaleExceededError(GCRansacError):
    """The brute-force oracle was asked to enumerate too many labelings."""


class NoModelFoundError(GCRansacError):
    """The robust estimator finished without any valid hypothesis.

    The partially filled run report is kept on ``report`` so callers can
    still inspect how many samples were drawn.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DatasetParseError(GCRansacError):
    """A dataset line could not be parsed; carries the 1-based line number."""

    def __init__(self, message, path=None, line_number=None):
        location = ""
        if path is not None:
            location = f"{path}:{line_number}: " if line_number is not None else f"{path}: "
        super().__init__(location + message)
        self.path = path
        self.line_number = line_number


class DatasetFormatError(DatasetParseError):
    """Rows of a dataset file disagree on their column count."""
