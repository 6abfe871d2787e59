"""
Exception hierarchy for the invariant set toolkit.

Every error raised for bad input derives from ValueError so callers can keep
treating "the request was wrong" separately from unexpected failures.
"""


class CisError(ValueError):
    """Base class for all toolkit errors."""


class DimensionMismatchError(CisError):
    pass


class DomainError(CisError):
    """A point or box lies outside the set an operation is defined on."""


class NonFiniteResultError(CisError):
    """A model evaluation produced inf or nan (ill-posed model)."""


class IntervalDivisionError(CisError):
    """Division by an interval that contains zero."""


class UnsupportedExpressionError(CisError):
    pass


class GridOverflowError(CisError):
    pass


class CellIndexError(CisError):
    pass


class PointOutsideDomainError(CisError):
    pass


class GridMismatchError(CisError):
    pass


class GroupingError(CisError):
    pass


class CouplingError(CisError):
    """A cascade coupling reaches beyond the immediate upstream block."""


class ProductSizeError(CisError):
    pass


class UnknownModelError(CisError):
    pass


class ModelDefinitionError(CisError):
    pass


class ConfigurationError(CisError):
    pass
