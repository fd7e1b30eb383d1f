"""Diagnostics shared by every stage of the toolchain.

A diagnostic pins a message to a source span. Spans are 1-based and always
cover at least one character, so editors and humans can point at the exact
token that caused trouble. Rendering follows the conventional
``file:line:col: severity: message`` shape, one diagnostic per line.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class Span:
    """Location of a source region: 1-based line/column plus length."""

    file: str
    line: int
    column: int
    length: int = 1

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1:
            raise ValueError("span line/column are 1-based")
        if self.length < 1:
            raise ValueError("span length must be >= 1")

    def covers(self, line: int, column: int) -> bool:
        """True if a 1-based (line, column) position falls inside this span."""
        return line == self.line and self.column <= column < self.column + self.length


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    span: Span

    def render(self) -> str:
        s = self.span
        return f"{s.file}:{s.line}:{s.column}: {self.severity}: [{self.code}] {self.message}"


def error(code: str, message: str, span: Span) -> Diagnostic:
    return Diagnostic(Severity.ERROR, code, message, span)


def warning(code: str, message: str, span: Span) -> Diagnostic:
    return Diagnostic(Severity.WARNING, code, message, span)


def has_errors(diagnostics) -> bool:
    return any(d.severity is Severity.ERROR for d in diagnostics)


def sorted_diagnostics(diagnostics) -> list[Diagnostic]:
    """Stable presentation order: by location, then severity, then message."""
    return sorted(
        diagnostics,
        key=lambda d: (d.span.file, d.span.line, d.span.column, d.severity.value, d.code, d.message),
    )


def render_all(diagnostics) -> str:
    return "\n".join(d.render() for d in sorted_diagnostics(diagnostics))
