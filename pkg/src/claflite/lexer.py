from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List

from .errors import IndentError, LexError

KEYWORDS = frozenset({
    "abstract", "final", "initial", "xor", "or", "mux", "assert",
    "all", "some", "no", "one", "lone", "let", "in", "not",
    "always", "never", "sometime", "next", "until", "initially", "finally",
    "between", "and", "this", "parent", "dref", "true", "false",
})

# longest first, so `-->>` is never read as `--` `>`
OPERATORS = (
    "-->>", "]->>", "-->", "->>", "]->", "<=>", "->", "-[", "=>", ":=", "&&", "||",
    "!=", "++", "--", "**", "..", "!", "=", ".", ",", ":", "[", "]", "(", ")",
    "|", "?", "*", "+",
)
_OPENERS = {"[", "(", "-["}
_CLOSERS = {"]", ")", "]->", "]->>"}

_TOKEN_RE = re.compile(
    r"(?P<ws>[ ]+)|(?P<num>[0-9]+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>"
    + "|".join(re.escape(op) for op in OPERATORS)
    + ")"
)


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT | KW | NUM | OP | EOF
    text: str
    line: int
    col: int

    def __repr__(self):
        return f"{self.kind}({self.text!r}@{self.line}:{self.col})"


@dataclass
class LogicalLine:
    indent: int
    tokens: List[Token]
    line: int


def _strip_comment(text: str) -> str:
    pos = text.find("//")
    return text if pos < 0 else text[:pos]


def tokenize_line(text: str, lineno: int, col0: int = 0) -> List[Token]:
    tokens = []
    pos = col0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            ch = text[pos]
            if ch == "\t":
                raise IndentError("tab character; indent with spaces only", lineno, pos + 1)
            raise LexError(f"unexpected character {ch!r}", lineno, pos + 1)
        kind = m.lastgroup
        word = m.group()
        if kind == "ident":
            tokens.append(Token("KW" if word in KEYWORDS else "IDENT", word, lineno, pos + 1))
        elif kind == "num":
            tokens.append(Token("NUM", word, lineno, pos + 1))
        elif kind == "op":
            tokens.append(Token("OP", word, lineno, pos + 1))
        pos = m.end()
    return tokens


def logical_lines(source: str) -> List[LogicalLine]:
    """Split source into logical lines; open brackets continue a line."""
    result: List[LogicalLine] = []
    depth = 0
    current: LogicalLine | None = None
    for lineno, raw in enumerate(source.splitlines(), start=1):
        text = _strip_comment(raw).rstrip(" \r")
        if not text.strip(" "):
            continue
        stripped = text.lstrip(" ")
        indent = len(text) - len(stripped)
        if stripped.startswith("\t") or "\t" in text[:indent + 1]:
            raise IndentError("tab character; indent with spaces only", lineno, indent + 1)
        tokens = tokenize_line(text, lineno, indent)
        if depth > 0 and current is not None:
            current.tokens.extend(tokens)
        else:
            current = LogicalLine(indent, tokens, lineno)
            result.append(current)
        for tok in tokens:
            if tok.kind == "OP" and tok.text in _OPENERS:
                depth += 1
            elif tok.kind == "OP" and tok.text in _CLOSERS:
                depth = max(0, depth - 1)
    return result
