"""Error types raised while loading minilang source."""

from __future__ import annotations


class MiniSyntaxError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, col {col})")
        self.line = line
        self.col = col


class MiniTypeError(Exception):
    """Undeclared types, unknown methods, signature mismatches."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        loc = f" (line {line}, col {col})" if line else ""
        super().__init__(message + loc)
        self.line = line
        self.col = col
