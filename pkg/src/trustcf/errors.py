"""Exception hierarchy shared across the toolkit.

The CLI maps these onto process exit codes: ConfigError -> 1,
DataError -> 2, NumericalError -> 3.
"""


class TrustcfError(Exception):
    pass


class ConfigError(TrustcfError):
    """Invalid configuration: unknown method, parameter out of its domain."""


class DataError(TrustcfError):
    """Missing or malformed input data."""


class DataFormatError(DataError):
    """A record that cannot be parsed; message carries the line number."""


class NumericalError(TrustcfError):
    """Divergence or non-convergence of an iterative routine."""


class InsufficientDataError(TrustcfError):
    """A statistical test was asked to run on too few effective samples."""
