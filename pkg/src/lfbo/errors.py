"""Exception types shared across the package."""

from __future__ import annotations


class InvalidArgumentError(ValueError):
    """An argument is non-finite, empty, or otherwise out of range."""


class EmptyDatasetError(ValueError):
    """An operation that needs observations was given none."""


class DomainError(ValueError):
    """A point or value lies outside the domain it is required to be in."""


class DegenerateTrainingError(ValueError):
    """Training was requested on data with no positively weighted sample."""


class NumericalError(ArithmeticError):
    """A numerical routine failed beyond recoverable tolerances."""


class TableSchemaError(ValueError):
    """A tabular benchmark file does not satisfy its declared schema."""


class TableParseError(ValueError):
    """A tabular benchmark file contains a row that cannot be parsed."""
