"""Source spans, diagnostics, and diagnostic rendering."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    """Half-inclusive source region. Lines and columns are 1-based and count
    UTF-8 code points."""

    file_id: int
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def merge(self, other: "SourceSpan") -> "SourceSpan":
        a = min((self.start_line, self.start_col), (other.start_line, other.start_col))
        b = max((self.end_line, self.end_col), (other.end_line, other.end_col))
        return SourceSpan(self.file_id, a[0], a[1], b[0], b[1])

    def contains(self, other: "SourceSpan") -> bool:
        return (self.start_line, self.start_col) <= (other.start_line, other.start_col) and (
            other.end_line,
            other.end_col,
        ) <= (self.end_line, self.end_col)


@dataclass
class Diagnostic:
    code: str  # E0xx / P0xx / L0xx
    severity: str  # "error" | "warning"
    message: str
    span: SourceSpan
    snippet: str = ""

    def render(self, file_name: str, source: str | None = None) -> str:
        head = (
            f"{file_name}:{self.span.start_line}:{self.span.start_col}: "
            f"{self.severity}[{self.code}]: {self.message}"
        )
        body = self.snippet
        if not body and source is not None:
            body = render_snippet(source, self.span)
        return head + ("\n" + body if body else "")

    def to_json(self, file_name: str) -> dict:
        return {
            "code": self.code,
            "severity": self.severity,
            "message": self.message,
            "file": file_name,
            "line": self.span.start_line,
            "col": self.span.start_col,
        }


def render_snippet(source: str, span: SourceSpan) -> str:
    """Return the offending source line with a caret underline."""
    lines = source.split("\n")
    if not 1 <= span.start_line <= len(lines):
        return ""
    line = lines[span.start_line - 1]
    width = 1
    if span.end_line == span.start_line:
        width = max(1, span.end_col - span.start_col)
    caret = " " * (span.start_col - 1) + "^" * width
    return f"    {line}\n    {caret}"
