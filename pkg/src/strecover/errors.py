"""Exception types shared across the package."""


class StrecoverError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(StrecoverError, ValueError):
    """An argument or configuration value violates its documented bounds."""


class ParseError(StrecoverError):
    """A data file is malformed; the message names the offending line."""


class DuplicateEntryError(StrecoverError):
    """The same (row, col) cell appears more than once."""


class DegenerateDistanceError(StrecoverError):
    """A selected nearest neighbor sits at distance zero (coincident sensors)."""


class DivergenceError(StrecoverError):
    """Training produced non-finite factors; usually the learning rate is too large."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch
