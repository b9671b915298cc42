"""Token definitions for the M lexer."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, auto

from .source import SourceSpan

KEYWORDS = {
    "model",
    "metamodel",
    "func",
    "import",
    "extends",
    "for",
    "in",
    "return",
    "if",
    "else",
    "true",
    "false",
}

# Keywords the parser also accepts as plain identifiers in expression,
# parameter, and member position (`model` is a parameter name in practice).
CONTEXTUAL_KEYWORDS = {"model", "metamodel"}


class TokenKind(Enum):
    KEYWORD = auto()
    IDENT = auto()
    INT = auto()
    FLOAT = auto()
    STRING = auto()
    OP = auto()  # operators and punctuation
    NEWLINE = auto()
    EOF = auto()


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    lexeme: str
    span: SourceSpan
    value: object = None  # decoded int/float/str payload for literals

    def is_kw(self, word: str) -> bool:
        return self.kind is TokenKind.KEYWORD and self.lexeme == word

    def is_op(self, op: str) -> bool:
        return self.kind is TokenKind.OP and self.lexeme == op
