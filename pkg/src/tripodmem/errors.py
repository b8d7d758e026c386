"""Exception types shared across the package."""


class TripodmemError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(TripodmemError):
    """A physical parameter or data-model invariant is violated."""


class ConfigError(TripodmemError):
    """A scenario config file is malformed or inconsistent (CLI exit code 2)."""


class NumericsError(TripodmemError):
    """The integrator produced non-finite values or an unsafe step size (CLI exit code 3)."""
