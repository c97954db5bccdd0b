"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class InvalidInputError(ValueError):
    """Input violates a documented precondition."""


class DegenerateInputError(InvalidInputError):
    """Input is well formed but too small or too uniform to analyse."""


class FormatError(InvalidInputError):
    """A file could not be parsed. ``line`` is 1-based when known."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None) -> None:
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class InvariantError(InvalidInputError):
    """Data parsed fine but breaks a matrix invariant (range, symmetry, diagonal)."""


class OracleScopeError(InvalidInputError):
    """Input exceeds the size a brute-force oracle is meant to handle."""
