"""Exception types raised across the tracking pipeline."""


class HutrackError(Exception):
    """Base class for all package errors."""


class DimensionError(HutrackError, ValueError):
    """Raster dimensions are too small or do not agree."""


class FrameFormatError(HutrackError, ValueError):
    """A file does not decode as a supported raster format."""


class ParseError(HutrackError, ValueError):
    """A text record could not be parsed.

    Parameters
    ----------
    message : str
        What went wrong.
    lineno : int, optional
        1-based line number of the offending record.
    """

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ValidationError(HutrackError, ValueError):
    """A value violates a documented invariant."""


class BoundsError(HutrackError, IndexError):
    """A blob pixel lies outside its frame."""


class DegenerateDenominatorError(HutrackError, ArithmeticError):
    """A strict Chi-Square term has a vanishing denominator."""

    def __init__(self, index, denominator):
        self.index = index
        self.denominator = denominator
        super().__init__(
            f"feature {index}: denominator {denominator!r} too close to zero"
        )


class OrderingError(HutrackError, ValueError):
    """Frames were fed to the tracker out of order."""
