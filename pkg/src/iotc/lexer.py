"""Tokenizer shared by the four specification languages.

All keywords are contextual: the lexer only distinguishes identifiers,
number and string literals, punctuation, and comparison operators. `//`
starts a comment running to end of line. Identifiers deliberately admit
`#` and `-` so names like ``room#1`` and ``TemperatureMgmt-Device-1``
lex as single tokens.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .diagnostics import Diagnostic, Severity, Span

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_#-]*")
NUMBER_RE = re.compile(r"-?[0-9]+(\.[0-9]+)?")

# token kinds
IDENT = "ident"
NUMBER = "number"
STRING = "string"
PUNCT = "punct"
OP = "op"
EOF = "eof"

_PUNCT = {"{", "}", "(", ")", ":", ","}
_OPS = ("<=", ">=", "==", "<", ">")


class LexError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: Span

    @property
    def value(self) -> float | int | str:
        if self.kind == NUMBER:
            return float(self.text) if "." in self.text else int(self.text)
        if self.kind == STRING:
            return _unescape(self.text[1:-1])
        return self.text


_ESCAPES = {"n": "\n", '"': '"', "\\": "\\"}


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        if body[i] == "\\" and i + 1 < len(body):
            out.append(_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(body[i])
            i += 1
    return "".join(out)


def tokenize(source: str, filename: str) -> list[Token]:
    """Tokenize `source`, raising :class:`LexError` on the first illegal character.

    The returned list always ends with a zero-width EOF token.
    """
    tokens: list[Token] = []
    line = 1
    line_start = 0
    i = 0
    n = len(source)

    def span(start: int, length: int) -> Span:
        return Span(filename, line, start - line_start + 1, max(length, 1))

    while i < n:
        c = source[i]
        if c == "\n":
            line += 1
            i += 1
            line_start = i
            continue
        if c in " \t\r":
            i += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if c == '"':
            j = i + 1
            while j < n and source[j] != '"':
                j = j + 2 if source[j] == "\\" else j + 1
            if j >= n:
                raise LexError(
                    Diagnostic(Severity.ERROR, "LexError", "unterminated string literal", span(i, 1))
                )
            tokens.append(Token(STRING, source[i : j + 1], span(i, j + 1 - i)))
            i = j + 1
            continue
        m = NUMBER_RE.match(source, i)
        if m and (c.isdigit() or (c == "-" and m.end() > i + 1)):
            tokens.append(Token(NUMBER, m.group(), span(i, m.end() - i)))
            i = m.end()
            continue
        m = IDENT_RE.match(source, i)
        if m:
            tokens.append(Token(IDENT, m.group(), span(i, m.end() - i)))
            i = m.end()
            continue
        two = source[i : i + 2]
        if two in _OPS:
            tokens.append(Token(OP, two, span(i, 2)))
            i += 2
            continue
        if c in ("<", ">"):
            tokens.append(Token(OP, c, span(i, 1)))
            i += 1
            continue
        if c in _PUNCT:
            tokens.append(Token(PUNCT, c, span(i, 1)))
            i += 1
            continue
        raise LexError(
            Diagnostic(Severity.ERROR, "LexError", f"illegal character {c!r}", span(i, 1))
        )

    tokens.append(Token(EOF, "", Span(filename, line, n - line_start + 1, 1)))
    return tokens
