"""Exception hierarchy shared by all modules.

The CLI maps the three top-level families onto distinct exit codes.
"""


class MarketIneffError(Exception):
    """Base class for every error raised by this package."""


class DataError(MarketIneffError):
    """Input data is malformed or violates a data invariant."""


class ParseError(DataError):
    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class IntegrityError(DataError):
    pass


class AlignmentError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class DegenerateSeriesError(DataError):
    """A series (or a window of it) has zero variance."""

    def __init__(self, message, series=None):
        self.series = series
        super().__init__(message)


class ShapeError(MarketIneffError, ValueError):
    pass


class RangeError(MarketIneffError, ValueError):
    pass


class FitError(MarketIneffError):
    """Not enough usable points for a log-log fit (no power law)."""


class NumericError(MarketIneffError):
    pass


class ContractViolation(MarketIneffError):
    """A walk-forward input is dated after the decision that uses it."""
