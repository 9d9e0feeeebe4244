"""Exception hierarchy shared across the library.

The CLI maps these onto process exit codes, so new error types should
subclass one of the three mid-level categories below rather than the root.
"""


class FlowKernelsError(Exception):
    """Root of everything raised deliberately by this package."""


class ConfigurationError(FlowKernelsError):
    """Bad user input: unknown system, invalid hyperparameter, malformed file."""


class NumericalError(FlowKernelsError):
    """A computation produced garbage: factorization failure, non-finite output."""


class FlowEscapeError(NumericalError):
    """A trajectory left the escape radius before the requested horizon.

    Parameters
    ----------
    escape_time : float
        First time (absolute value, in the integration direction) at which
        the state norm exceeded the radius.
    """

    def __init__(self, escape_time: float, radius: float, message: str | None = None):
        self.escape_time = float(escape_time)
        self.radius = float(radius)
        if message is None:
            message = (
                f"trajectory escaped |x| > {radius:g} at t = {escape_time:.6g}; "
                "shrink the horizon or move the initial condition"
            )
        super().__init__(message)


class DimensionMismatchError(ConfigurationError):
    """State vector length does not match the system dimension."""


class UnsupportedSpectrumError(ConfigurationError):
    """Linearization has complex or repeated eigenvalues; only simple real
    spectra are supported."""


class UnknownEigenvalueError(ConfigurationError):
    """Requested eigenvalue is not in the linearization spectrum."""
