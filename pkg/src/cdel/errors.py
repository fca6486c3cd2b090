"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError (and
subclasses) -> 3, NumericError -> 4.
"""


class CdelError(Exception):
    """Base class for all package errors."""


class ConfigError(CdelError):
    """Malformed or inconsistent run configuration."""


class DataError(CdelError):
    """Bad input data: schema violations, missing files, inconsistent ids."""


class SchemaError(DataError):
    """Manifest rows violating the documented schema."""


class FormatError(DataError):
    """Malformed embedding / assignment files."""


class DimensionError(DataError):
    """Vector or matrix shape does not match the expected layout."""


class ParameterError(DataError):
    """Out-of-range algorithm parameter (k > n, zero prior, ...)."""


class DegenerateInputError(DataError):
    """Input too small or too uniform for the requested operation."""


class UndefinedIndexError(DataError):
    """Validity index requested outside its domain (c < 2 or c > n-1)."""


class SelectionError(DataError):
    """No usable candidate survived threshold / algorithm selection."""


class NumericError(CdelError):
    """Numerical failure (eigensolver breakdown, non-finite logits)."""
