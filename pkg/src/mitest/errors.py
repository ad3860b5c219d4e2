"""Exception types raised by mitest."""


class MITestError(ValueError):
    """Base class for data and numerical errors."""


class TableError(MITestError):
    """Invalid contingency table or probability table."""


class ZeroCellError(TableError):
    """A calculus operation met a cell with zero probability."""


class SeriesConvergenceError(MITestError):
    """The gamma series did not reach the requested accuracy."""


class NegativeWeightError(MITestError):
    """The series CDF was asked for a weight vector with negative entries."""


class BinningError(MITestError):
    """Continuous data cannot be discretized into at least a 2x2 table."""
