"""Exceptions raised by the induction library."""


class DimensionMismatchError(ValueError):
    """An input's length does not match the ambient dimension."""


class EnumerationBudgetError(ValueError):
    """An exact computation would enumerate more free coordinates than allowed."""


class TreeFormatError(ValueError):
    """A tree or distribution document is malformed or violates tree invariants."""


class ConfigError(ValueError):
    """An experiment configuration failed validation."""


class EmptySampleError(ValueError):
    """An estimator was handed an empty sample multiset."""


class UnknownLeafError(KeyError, ValueError):
    """A leaf identifier does not name a leaf of the tree."""
