"""Exception hierarchy shared by the pipeline stages."""


class SleepThermError(Exception):
    """Base class for all package errors."""


class RRParseError(SleepThermError, ValueError):
    """A line of an RR file could not be read as a number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyRecordingError(SleepThermError, ValueError):
    pass


class RRValidationError(SleepThermError, ValueError):
    """An interval violates the RR series invariants."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DataQualityError(SleepThermError):
    """Too many beats had to be replaced for the recording to be usable."""


class InsufficientDataError(SleepThermError, ValueError):
    pass
