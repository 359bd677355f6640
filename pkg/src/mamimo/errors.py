"""Exception hierarchy shared by all simulator modules."""


class SimulationError(Exception):
    """Base class for all errors raised by this package."""

    category = "simulation"


class ConfigError(SimulationError):
    """Invalid or inconsistent configuration values."""

    category = "config"


class UnsupportedTopology(ConfigError):
    """Requested cell layout is not the supported 1-ring topology."""


class DegenerateDistance(SimulationError):
    """A user coincides with a base station (zero propagation distance)."""


class NoInterference(SimulationError):
    """Asymptotic SINR is undefined because cross-cell interference is zero."""


class TooManyPilots(SimulationError):
    """Exhaustive search requested beyond the factorial enumeration guard."""


class ZeroSinr(SimulationError):
    """Power control observed a zero SINR, so the interference measure is undefined."""


class InsufficientSamples(SimulationError):
    """Not enough samples to estimate the requested percentile."""
