"""Exception types shared across the package.

CLI exit-code mapping: ConfigError -> 2, DataError -> 3, NumericError -> 4.
"""


class PumcError(Exception):
    pass


class ConfigError(PumcError):
    """Invalid configuration or parameter combination, detected before compute."""


class SizeError(ConfigError):
    """A requested operation exceeds a configured size cap."""


class DataError(PumcError):
    """Malformed or inconsistent input data (files, index ranges, shapes)."""


class NumericError(PumcError):
    """Non-finite values or divergence during optimization."""
