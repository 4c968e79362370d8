"""Exception types shared across the package.

The CLI maps these onto stable exit codes: DataError -> 3, NumericError -> 4.
"""


class IclestError(Exception):
    """Base class for all package errors."""


class DataError(IclestError):
    """Invalid, inconsistent, or missing input data."""


class NumericError(IclestError):
    """A numeric procedure failed (divergence, non-monotone curve, ...)."""
