"""Exception types raised by ringfit."""


class RingfitError(Exception):
    """Base class for all ringfit errors."""


class InvalidParameterError(RingfitError, ValueError):
    """A physical or numerical parameter is outside its valid domain."""


class InvalidInputError(RingfitError, ValueError):
    """Input data has the wrong shape, length, or is empty."""


class DegenerateInputError(RingfitError, ValueError):
    """Input is well-formed but degenerate (zero variance, zero norm, ...)."""


class FileFormatError(RingfitError, ValueError):
    """A persisted artifact could not be decoded."""
