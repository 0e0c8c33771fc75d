"""Exception hierarchy shared by the library and the CLI.

Each class maps to one CLI exit code (see ``mixcomp.cli``).
"""


class MixcompError(Exception):
    """Base class for all library errors."""


class InvalidInputError(MixcompError, ValueError):
    """Arguments violate a documented precondition."""


class DegenerateModelError(MixcompError, ValueError):
    """The mixture cannot produce a positive density (e.g. all weights zero)."""


class NumericalDomainError(MixcompError, ArithmeticError):
    """A density underflowed to zero even in log space."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class InsufficientDataError(InvalidInputError):
    """Fewer data points than mixture components."""


class FitFailureError(MixcompError, RuntimeError):
    """Every EM restart collapsed."""


class StepFailureError(FitFailureError):
    """No candidate mixture size could be fitted for one window."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class DataFormatError(MixcompError, ValueError):
    """Input file is malformed or misses required columns."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
