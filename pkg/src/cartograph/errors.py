"""Exception types shared across the toolkit."""


class CartographError(Exception):
    """Base class for data- and file-level errors raised by this package."""


class LogFormatError(CartographError):
    """A dynamics log does not conform to the cartograph-dynlog v1 format."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class DatasetError(CartographError):
    """A dataset file is malformed or internally inconsistent."""


class TrainingDivergedError(CartographError):
    """Training produced a non-finite loss or non-finite parameters."""
