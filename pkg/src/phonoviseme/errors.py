"""Exception types raised across the package."""


class PhonovisemeError(Exception):
    """Base class for every error raised by this package."""


class ParseError(PhonovisemeError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(PhonovisemeError, ValueError):
    pass


class ShapeError(PhonovisemeError, ValueError):
    pass


class DomainError(PhonovisemeError, ValueError):
    pass


class EmptyInputError(PhonovisemeError, ValueError):
    pass


class CapacityError(PhonovisemeError, ValueError):
    pass


class ConfigError(PhonovisemeError, ValueError):
    pass


class DecodeError(PhonovisemeError, ValueError):
    pass


class UsageError(PhonovisemeError, ValueError):
    pass


class GradCheckError(PhonovisemeError, RuntimeError):
    pass
