from __future__ import annotations


class DholError(Exception):
    """Base class for all errors raised by the toolchain."""


class TypeCheckError(DholError):
    def __init__(self, message: str, location: str | None = None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.message = message
        self.location = location


class HolTypeError(DholError):
    def __init__(self, message: str, path: tuple = ()):
        where = "/".join(path)
        super().__init__(f"{message} (at {where})" if where else message)
        self.message = message
        self.path = path


class ParseError(DholError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class TranslationError(DholError):
    """Input the translator refuses, e.g. a name clash with generated symbols."""
