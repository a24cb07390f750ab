"""Exception taxonomy shared by all modules.

Configuration-type errors (bad arguments, violated contracts, unsupported
dimensions) map to CLI exit code 2; numerical failures map to exit code 3.
"""


class ConfigurationError(ValueError):
    """Invalid argument, scenario key, or violated call contract."""


class UnsupportedConfigError(ConfigurationError):
    """Requested dimensions outside the supported table range."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or left its validated domain."""
