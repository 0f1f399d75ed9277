"""Error types shared across the package.

Each class carries the process exit status the CLI reports for it.
"""


class QA3CError(Exception):
    exit_code = 1


class ConfigurationError(QA3CError, ValueError):
    """Invalid configuration, shape or index."""

    exit_code = 2


class StorageError(QA3CError, OSError):
    exit_code = 3


class NumericError(QA3CError, ArithmeticError):
    """NaN/invalid numbers encountered during a forward pass or sampling."""

    exit_code = 4


class ToleranceError(QA3CError):
    exit_code = 5


class UsageError(QA3CError, RuntimeError):
    """Operation called in a state that does not allow it."""

    exit_code = 6
