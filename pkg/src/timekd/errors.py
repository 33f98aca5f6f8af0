"""
Exception hierarchy for TimeKD.

Every error carries the exit code the CLI reports for it.
"""


class TimeKDError(Exception):
    """Base class for all TimeKD failures."""

    exit_code = 1

    def one_line(self) -> str:
        """Machine-parsable single-line rendering used by the CLI."""
        message = str(self).replace("\n", " ").replace('"', "'")
        return f'error={type(self).__name__} code={self.exit_code} message="{message}"'


class ConfigError(TimeKDError):
    exit_code = 2


class StaleCacheError(TimeKDError):
    """Cache was produced under a different teacher configuration."""

    exit_code = 3


class CacheMissError(TimeKDError, KeyError):
    exit_code = 4

    def __init__(self, window: int, message: str | None = None):
        self.window = window
        super().__init__(message or f"no cached artifact for window {window}")

    def __str__(self) -> str:
        return str(self.args[0])


class IoError(TimeKDError):
    exit_code = 5


class ParseError(TimeKDError):
    exit_code = 6

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class FormatError(TimeKDError):
    """Binary file does not match its declared layout."""

    exit_code = 7

    def __init__(self, offset: int, message: str):
        self.offset = offset
        super().__init__(f"byte offset {offset}: {message}")


class InsufficientDataError(TimeKDError):
    exit_code = 8


class ShapeError(TimeKDError, ValueError):
    exit_code = 9


class ContractError(TimeKDError, ValueError):
    exit_code = 9


class DegenerateRowError(ContractError):
    """A softmax row had no permitted entry."""


class LengthError(ContractError):
    """Token sequence longer than the model's maximum length."""


class NonFiniteError(TimeKDError, ArithmeticError):
    exit_code = 10
