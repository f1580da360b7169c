"""Exception hierarchy shared across the package."""


class LGSSError(Exception):
    """Base class for all package errors."""


class ConfigError(LGSSError, ValueError):
    """Invalid scenario, method or grid configuration."""


class DataError(LGSSError, ValueError):
    """Malformed or degenerate data (bad CSV, zero signal variance, ...)."""


class UnderdeterminedError(LGSSError):
    """The reduced design has no unique minimizer (rank deficient or too wide)."""


class SelectionError(LGSSError):
    """A selection procedure could not produce any fittable candidate."""
