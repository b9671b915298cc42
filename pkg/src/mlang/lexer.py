"""Lexer for M source. Newline-sensitive: NEWLINE tokens terminate
statements; comments and other whitespace are skipped."""

from __future__ import annotations

from .source import Diagnostic, SourceSpan, render_snippet
from .tokens import KEYWORDS, Token, TokenKind

# Multi-char operators first so maximal munch works.
OPERATORS = [
    "==", "!=", "<=", ">=", "&&", "||", "->",
    "+", "-", "*", "/", "%", "=", "<", ">", "!",
    "(", ")", "{", "}", "[", "]", ",", ".", ":", ";",
]

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


class Lexer:
    def __init__(self, source: str, file_id: int = 0):
        self.src = source
        self.file_id = file_id
        self.pos = 0
        self.line = 1
        self.col = 1
        self.tokens: list[Token] = []
        self.diagnostics: list[Diagnostic] = []

    def _peek(self, off: int = 0) -> str:
        i = self.pos + off
        return self.src[i] if i < len(self.src) else ""

    def _advance(self) -> str:
        ch = self.src[self.pos]
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def _span_from(self, line: int, col: int) -> SourceSpan:
        return SourceSpan(self.file_id, line, col, self.line, self.col)

    def _emit(self, kind: TokenKind, lexeme: str, span: SourceSpan, value=None):
        self.tokens.append(Token(kind, lexeme, span, value))

    def _error(self, code: str, message: str, span: SourceSpan):
        self.diagnostics.append(
            Diagnostic(code, "error", message, span, render_snippet(self.src, span))
        )

    def run(self) -> tuple[list[Token], list[Diagnostic]]:
        while self.pos < len(self.src):
            ch = self._peek()
            if ch == "\r":
                self._advance()  # CRLF handled by the \n branch
                continue
            if ch == "\n":
                line, col = self.line, self.col
                self._advance()
                # collapse runs of blank lines into one NEWLINE
                if self.tokens and self.tokens[-1].kind is not TokenKind.NEWLINE:
                    self._emit(TokenKind.NEWLINE, "\n", self._span_from(line, col))
                continue
            if ch in " \t":
                self._advance()
                continue
            if ch == "/" and self._peek(1) == "/":
                while self.pos < len(self.src) and self._peek() != "\n":
                    self._advance()
                continue
            if ch == "/" and self._peek(1) == "*":
                self._block_comment()
                continue
            if ch == '"':
                self._string()
                continue
            if ch.isdigit() or (ch == "." and self._peek(1).isdigit()):
                self._number()
                continue
            if ch.isalpha() or ch == "_":
                self._ident()
                continue
            if not self._operator():
                line, col = self.line, self.col
                self._advance()
                self._error("L002", f"invalid character {ch!r}", self._span_from(line, col))
        if self.tokens and self.tokens[-1].kind is TokenKind.NEWLINE:
            pass
        eof_span = SourceSpan(self.file_id, self.line, self.col, self.line, self.col)
        self._emit(TokenKind.EOF, "", eof_span)
        return self.tokens, self.diagnostics

    def _block_comment(self):
        line, col = self.line, self.col
        self._advance()
        self._advance()
        while self.pos < len(self.src):
            if self._peek() == "*" and self._peek(1) == "/":
                self._advance()
                self._advance()
                return
            self._advance()
        self._error("L002", "unterminated block comment", self._span_from(line, col))

    def _string(self):
        line, col = self.line, self.col
        start = self.pos
        self._advance()  # opening quote
        out: list[str] = []
        while self.pos < len(self.src):
            ch = self._peek()
            if ch == "\n":
                break
            if ch == '"':
                self._advance()
                lexeme = self.src[start : self.pos]
                self._emit(TokenKind.STRING, lexeme, self._span_from(line, col), "".join(out))
                return
            if ch == "\\":
                self._advance()
                esc = self._peek()
                if esc in _ESCAPES:
                    out.append(_ESCAPES[esc])
                    self._advance()
                else:
                    self._error(
                        "L002",
                        f"invalid escape \\{esc}",
                        self._span_from(self.line, self.col),
                    )
                    if self.pos < len(self.src):
                        self._advance()
                continue
            out.append(self._advance())
        self._error("L001", "unterminated string", self._span_from(line, col))

    def _number(self):
        line, col = self.line, self.col
        start = self.pos
        while self._peek().isdigit():
            self._advance()
        is_float = False
        if self._peek() == "." and self._peek(1).isdigit():
            is_float = True
            self._advance()
            while self._peek().isdigit():
                self._advance()
        if self._peek() in "eE":
            nxt = self._peek(1)
            if nxt.isdigit() or (nxt in "+-" and self._peek(2).isdigit()):
                is_float = True
                self._advance()
                if self._peek() in "+-":
                    self._advance()
                while self._peek().isdigit():
                    self._advance()
        # trailing letters/dots make the literal malformed: `1.2.3`, `3x`
        if self._peek().isalpha() or self._peek() == "_" or (
            self._peek() == "." and self._peek(1).isdigit()
        ):
            while self._peek().isalnum() or self._peek() in "._":
                self._advance()
            self._error("L003", f"malformed number {self.src[start:self.pos]!r}", self._span_from(line, col))
            return
        lexeme = self.src[start : self.pos]
        span = self._span_from(line, col)
        if is_float:
            self._emit(TokenKind.FLOAT, lexeme, span, float(lexeme))
        else:
            self._emit(TokenKind.INT, lexeme, span, int(lexeme))

    def _ident(self):
        line, col = self.line, self.col
        start = self.pos
        while self._peek().isalnum() or self._peek() == "_":
            self._advance()
        lexeme = self.src[start : self.pos]
        span = self._span_from(line, col)
        kind = TokenKind.KEYWORD if lexeme in KEYWORDS else TokenKind.IDENT
        self._emit(kind, lexeme, span)

    def _operator(self) -> bool:
        for op in OPERATORS:
            if self.src.startswith(op, self.pos):
                line, col = self.line, self.col
                for _ in op:
                    self._advance()
                self._emit(TokenKind.OP, op, self._span_from(line, col))
                return True
        return False


def lex(source: str, file_id: int = 0) -> tuple[list[Token], list[Diagnostic]]:
    return Lexer(source, file_id).run()
