"""Exception hierarchy shared by all skewlab modules."""


class SkewLabError(Exception):
    """Base class for every error raised by skewlab."""


class InputError(SkewLabError, ValueError):
    """Malformed or inconsistent input (bad matrix, inadmissible word, ...)."""


class MapValidationError(InputError):
    """A fiber map is not an increasing map of [0, 1] into its interior."""


class DomainError(SkewLabError, ValueError):
    """A point lies outside the image of a fiber map, so no preimage exists."""


class StructureError(SkewLabError):
    """The input contradicts a structural requirement (transitivity, alternation)."""


class GenericityError(SkewLabError):
    """The system is degenerate in the sense of the genericity conditions."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConvergenceError(SkewLabError):
    """An iterative procedure hit its iteration cap."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class ParameterError(InputError):
    """A numerical parameter is out of its admissible range."""


class SearchError(SkewLabError):
    """A bounded word search gave up before finding a witness."""


class TrappingRetry(SkewLabError):
    """Strict trapping failed; retry with the suggested smaller parameters."""

    def __init__(self, message, eps, delta):
        super().__init__(message)
        self.eps = eps
        self.delta = delta
