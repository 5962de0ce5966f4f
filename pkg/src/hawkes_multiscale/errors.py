"""Exception hierarchy. Each class carries a distinct CLI exit code."""


class HawkesError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ParameterError(HawkesError, ValueError):
    """A parameter is outside its documented domain."""

    exit_code = 2


class DataFormatError(HawkesError, ValueError):
    """Malformed or inconsistent input data (bad record, empty component,
    non-monotone timestamps)."""

    exit_code = 3


class StabilityError(HawkesError, RuntimeError):
    """Operation requires a stationary model (spectral radius < 1)."""

    exit_code = 4


class NumericalError(HawkesError, RuntimeError):
    """Linear-algebra failure: singular or effectively singular system,
    power iteration that does not converge."""

    exit_code = 5


class CoverageError(HawkesError, ValueError):
    """Requested lags or grid extend beyond what the data supports."""

    exit_code = 6
