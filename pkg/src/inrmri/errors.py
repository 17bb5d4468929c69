"""Exception hierarchy shared by all modules.

The CLI maps these onto its exit-code contract: config errors exit 2,
data errors exit 3, numerical failures exit 4.
"""


class InrmriError(Exception):
    """Base class for all package errors."""


class ConfigError(InrmriError):
    """Invalid or unparseable run configuration."""


class DataError(InrmriError):
    """Malformed inputs: shape mismatches, missing files, bad containers."""


class NumericalError(InrmriError):
    """Numerical failure: non-convergence, non-finite values."""
