"""Shared exception types."""


class TapkitError(Exception):
    """Data or validation failure anywhere in the library."""


class ParseError(TapkitError):
    """Tapping-DSL syntax or semantic error, carrying a 1-based source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col
