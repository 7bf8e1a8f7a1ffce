"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2,
numeric/runtime failures exit 3.
"""


class ConfigError(ValueError):
    """A configuration value violates its documented invariant."""


class UsageError(ValueError):
    """An operation was called outside its precondition (e.g. dimension mismatch)."""


class UndefinedAlignmentError(UsageError):
    """Cosine alignment requested against a zero matrix or zero vector."""


class DeletionError(UsageError):
    """A deletion event references history that is not in the gradient log."""


class NumericError(RuntimeError):
    """A numeric routine left its domain (singular matrix, failed bisection, non-finite value)."""
