class ShuttlehitError(Exception):
    pass


class UsageError(ShuttlehitError):
    pass


class DataError(ShuttlehitError):
    pass


class ConfigurationError(DataError):
    pass


class RallyFormatError(DataError):
    """
    A rally file that can't be parsed. Carries the file and row
    that caused the failure, when known.
    """
    def __init__(self, message: str, path=None, row=None):
        self.path = path
        self.row = row
        context = ""
        if path is not None:
            context += f"{path}"
        if row is not None:
            context += f" (row {row})" if context else f"row {row}"
        super().__init__(f"{context}: {message}" if context else message)


class InvalidRallyError(DataError):
    pass


class FrameError(DataError):
    pass


class StreamError(DataError):
    pass


class AssemblyError(DataError):
    pass


class PerturbError(ShuttlehitError):
    pass
