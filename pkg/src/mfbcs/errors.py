"""Exception types shared across the package."""


class MfbcsError(Exception):
    """Base class for all package errors."""


class CapacityError(MfbcsError):
    """Requested system size exceeds the configured dense capacity.

    Raised by dense builders for site counts above the dense limit; the
    message points at the pure-state Krylov path where one exists.
    """


class ConfigError(MfbcsError):
    """Invalid run configuration (bad key, bad value, parse failure)."""


class NumericalAbortError(MfbcsError):
    """An integrator or solver left its validity envelope (e.g. positivity)."""


class TruncationError(MfbcsError):
    """A truncated series' certified remainder bound exceeds the tolerance."""
