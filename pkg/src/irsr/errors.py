"""Exception types raised across the toolkit."""


class IrsrError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(IrsrError, ValueError):
    """Operands have incompatible or invalid shapes."""


class DegenerateSizeError(ShapeError):
    """An image is too small for the requested decomposition."""


class InvalidParameterError(IrsrError, ValueError):
    """A scalar parameter is outside its valid range."""


class FormatError(IrsrError, ValueError):
    """A file does not follow the expected binary layout."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedFormatError(FormatError):
    """A file is well formed but uses a feature that is not supported."""
