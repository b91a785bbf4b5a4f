"""Exception hierarchy shared by every module."""


class DataMarketError(Exception):
    """Base class for all errors raised by the package."""


class IngestionError(DataMarketError):
    """A CSV line could not be parsed into a record."""


class SchemaError(DataMarketError):
    """Duplicate or unknown attribute names."""


class ArgumentError(DataMarketError, ValueError):
    """A caller-supplied argument violates an operation's precondition."""


class UndefinedQualityError(DataMarketError):
    """Quality asked of an empty relation or an empty join."""


class DegenerateDistributionError(DataMarketError):
    """Join informativeness asked of a joint distribution with zero entropy."""


class EstimationFailedError(DataMarketError):
    """A sample-based estimate had nothing to work with.

    ``seed`` is the seed that produced the empty sample so callers can retry.
    """

    def __init__(self, message: str, seed: int | None = None):
        super().__init__(message)
        self.seed = seed


class CoverageError(DataMarketError):
    """An attribute is not present in any instance."""

    def __init__(self, attribute: str):
        super().__init__(f"attribute {attribute!r} is not covered by any instance")
        self.attribute = attribute


class CapacityError(DataMarketError):
    """An exhaustive procedure was asked to enumerate more than its guard allows."""


class InfeasibleError(DataMarketError):
    """No candidate satisfies the constraints."""
