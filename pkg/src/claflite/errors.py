from __future__ import annotations


class ClafliteError(Exception):
    """A model error carrying an error kind and an optional source position."""

    kind = "ERROR"

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col

    def location(self, filename: str = "<input>") -> str:
        if self.line is None:
            return filename
        return f"{filename}:{self.line}:{self.col or 1}"

    def __str__(self) -> str:
        where = f"{self.line}:{self.col or 1}: " if self.line is not None else ""
        return f"{where}{self.kind}: {self.message}"


class LexError(ClafliteError):
    kind = "LEX"


class IndentError(ClafliteError):
    kind = "INDENT"


class ParseError(ClafliteError):
    kind = "SYNTAX"


class UnresolvedName(ClafliteError):
    kind = "UNRESOLVED"


class AmbiguousName(ClafliteError):
    kind = "AMBIGUOUS"


class DuplicateName(ClafliteError):
    kind = "DUPLICATE"


class TypeMismatch(ClafliteError):
    kind = "TYPE"


class NotSupported(ClafliteError):
    kind = "NOT-SUPPORTED"


class DesugarError(ClafliteError):
    kind = "DESUGAR"
