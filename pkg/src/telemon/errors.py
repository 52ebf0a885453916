"""Exception types shared across modules."""

from __future__ import annotations


class TelemonError(Exception):
    """Base class for domain errors raised by this package."""


class ValidationError(TelemonError):
    """A record or argument violates a documented invariant."""


class ParseError(TelemonError):
    """A file could not be parsed; carries file/line/column context."""

    def __init__(self, message: str, *, file: str = "", line: int = 0, column: str = ""):
        self.file = file
        self.line = line
        self.column = column
        where = file
        if line:
            where += f":{line}"
        if column:
            where += f" (column {column})"
        super().__init__(f"{where}: {message}" if where else message)
