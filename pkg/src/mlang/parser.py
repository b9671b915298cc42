"""Recursive-descent parser with precedence climbing for expressions.

Statements are terminated by NEWLINE or `;`. Newlines are transparent
inside `(`, `[`, and record-literal `{` so calls and literals can span
lines."""

from __future__ import annotations

from typing import Optional

from . import ast_nodes as A
from .source import Diagnostic, SourceSpan, render_snippet
from .tokens import CONTEXTUAL_KEYWORDS, Token, TokenKind

BINARY_PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6, "%": 6,
}

_CLOSERS = {")", "]", "}"}


class ParseError(Exception):
    def __init__(self, diag: Diagnostic):
        super().__init__(diag.message)
        self.diag = diag


class Parser:
    def __init__(self, tokens: list[Token], source: str = ""):
        self.tokens = tokens
        self.source = source
        self.pos = 0
        self.nl_depth = 0  # >0 inside ( [ or record {: newlines skipped
        self.diagnostics: list[Diagnostic] = []

    # ------------------------------------------------------------- plumbing

    def _peek(self, off: int = 0) -> Token:
        i = self.pos
        seen = 0
        while True:
            tok = self.tokens[min(i, len(self.tokens) - 1)]
            if self.nl_depth > 0 and tok.kind is TokenKind.NEWLINE:
                i += 1
                continue
            if seen == off:
                return tok
            seen += 1
            i += 1

    def _advance(self) -> Token:
        tok = self._peek()
        # move pos past the returned token (skipping transparent newlines)
        while True:
            cur = self.tokens[min(self.pos, len(self.tokens) - 1)]
            if self.pos < len(self.tokens) - 1:
                self.pos += 1
            if cur is tok or cur.kind is TokenKind.EOF:
                break
        return tok

    def _at_eof(self) -> bool:
        return self._peek().kind is TokenKind.EOF

    def _error(self, code: str, message: str, span: SourceSpan) -> ParseError:
        diag = Diagnostic(code, "error", message, span, render_snippet(self.source, span))
        return ParseError(diag)

    def _expect_op(self, op: str) -> Token:
        tok = self._peek()
        if tok.is_op(op):
            return self._advance()
        if op in _CLOSERS and tok.kind is TokenKind.EOF:
            raise self._error("P002", f"unclosed delimiter, expected `{op}`", tok.span)
        raise self._error("P001", f"unexpected token {describe(tok)}, expected `{op}`", tok.span)

    def _expect_ident(self, allow_contextual: bool = True) -> Token:
        tok = self._peek()
        if tok.kind is TokenKind.IDENT:
            return self._advance()
        if allow_contextual and tok.kind is TokenKind.KEYWORD and tok.lexeme in CONTEXTUAL_KEYWORDS:
            return self._advance()
        raise self._error("P001", f"unexpected token {describe(tok)}, expected identifier", tok.span)

    def _skip_newlines(self):
        while self._peek().kind is TokenKind.NEWLINE:
            self._advance()

    def _terminator(self):
        """Consume a statement terminator (NEWLINE, `;`, or lookahead `}`/EOF)."""
        tok = self._peek()
        if tok.kind is TokenKind.NEWLINE or tok.is_op(";"):
            self._advance()
            return
        if tok.is_op("}") or tok.kind is TokenKind.EOF:
            return
        raise self._error(
            "P001", f"unexpected token {describe(tok)}, expected end of statement", tok.span
        )

    # ------------------------------------------------------------- top level

    def parse_program(self) -> A.Program:
        items: list[A.Stmt] = []
        self._skip_newlines()
        start = self._peek().span
        while not self._at_eof():
            try:
                items.append(self._parse_item())
            except ParseError as err:
                self.diagnostics.append(err.diag)
                self._synchronize()
            self._skip_newlines()
        span = start.merge(self._peek().span) if items else self._peek().span
        return A.Program(items, span=span)

    def _synchronize(self):
        self.nl_depth = 0
        while not self._at_eof():
            tok = self._peek()
            if tok.kind is TokenKind.NEWLINE or tok.is_op(";"):
                self._advance()
                return
            self._advance()

    def _parse_item(self) -> A.Stmt:
        tok = self._peek()
        if tok.is_kw("import"):
            return self._parse_import()
        if tok.is_kw("metamodel") and self._peek(1).kind is TokenKind.IDENT:
            return self._parse_model_like(metamodel=True)
        if tok.is_kw("model") and self._peek(1).kind is TokenKind.IDENT:
            return self._parse_model_like(metamodel=False)
        if tok.is_kw("func"):
            return self._parse_func()
        return self._parse_statement()

    def _parse_import(self) -> A.ImportDecl:
        start = self._advance().span
        tok = self._peek()
        if tok.kind is TokenKind.STRING:
            self._advance()
            node = A.ImportDecl(str(tok.value), True, span=start.merge(tok.span))
        else:
            first = self._expect_ident()
            parts = [first.lexeme]
            end = first.span
            while self._peek().is_op("."):
                self._advance()
                part = self._expect_ident()
                parts.append(part.lexeme)
                end = part.span
            node = A.ImportDecl(".".join(parts), False, span=start.merge(end))
        self._terminator()
        return node

    def _parse_model_like(self, metamodel: bool) -> A.Stmt:
        start = self._advance().span
        name = self._expect_ident(allow_contextual=False)
        parent = None
        if not metamodel and self._peek().is_kw("extends"):
            self._advance()
            parent = self._expect_ident(allow_contextual=False).lexeme
        self._expect_op("{")
        fields: list[A.FieldDef] = []
        self._skip_newlines()
        while not self._peek().is_op("}"):
            if self._at_eof():
                raise self._error("P002", "unclosed delimiter, expected `}`", self._peek().span)
            fname = self._expect_ident()
            self._expect_op("=")
            value = self._parse_expr()
            fields.append(A.FieldDef(fname.lexeme, value, span=fname.span.merge(value.span)))
            self._terminator()
            self._skip_newlines()
        end = self._advance().span
        span = start.merge(end)
        if metamodel:
            return A.MetamodelDecl(name.lexeme, fields, span=span)
        return A.ModelDecl(name.lexeme, parent, fields, span=span)

    def _parse_func(self) -> A.FuncDecl:
        start = self._advance().span
        name = self._expect_ident(allow_contextual=False)
        self._expect_op("(")
        self.nl_depth += 1
        params: list[A.Param] = []
        if not self._peek().is_op(")"):
            while True:
                pname = self._expect_ident()
                self._expect_op(":")
                tref = self._parse_type_ref()
                params.append(A.Param(pname.lexeme, tref, span=pname.span.merge(tref.span)))
                if self._peek().is_op(","):
                    self._advance()
                    continue
                break
        self._expect_op(")")
        self.nl_depth -= 1
        ret = None
        if self._peek().is_op("->"):
            self._advance()
            ret = self._parse_type_ref()
        body = self._parse_block()
        return A.FuncDecl(name.lexeme, params, ret, body, span=start.merge(body.span))

    def _parse_type_ref(self) -> A.TypeRef:
        name = self._expect_ident()
        args: list[A.TypeRef] = []
        end = name.span
        if self._peek().is_op("<"):
            self._advance()
            while True:
                args.append(self._parse_type_ref())
                if self._peek().is_op(","):
                    self._advance()
                    continue
                break
            end = self._expect_op(">").span
        return A.TypeRef(name.lexeme, args, span=name.span.merge(end))

    # ------------------------------------------------------------ statements

    def _parse_block(self) -> A.Block:
        start = self._expect_op("{").span
        stmts: list[A.Stmt] = []
        self._skip_newlines()
        while not self._peek().is_op("}"):
            if self._at_eof():
                raise self._error("P002", "unclosed delimiter, expected `}`", self._peek().span)
            stmts.append(self._parse_statement())
            self._skip_newlines()
        end = self._advance().span
        return A.Block(stmts, span=start.merge(end))

    def _parse_statement(self) -> A.Stmt:
        tok = self._peek()
        if tok.is_kw("for"):
            return self._parse_for()
        if tok.is_kw("if"):
            return self._parse_if()
        if tok.is_kw("return"):
            return self._parse_return()
        return self._parse_assign_or_expr()

    def _parse_for(self) -> A.ForStmt:
        start = self._advance().span
        var = self._expect_ident()
        if not self._peek().is_kw("in"):
            raise self._error(
                "P001", f"unexpected token {describe(self._peek())}, expected `in`", self._peek().span
            )
        self._advance()
        iterable = self._parse_expr()
        body = self._parse_block()
        return A.ForStmt(var.lexeme, iterable, body, span=start.merge(body.span))

    def _parse_if(self) -> A.IfStmt:
        start = self._advance().span
        cond = self._parse_expr()
        then = self._parse_block()
        orelse = None
        end = then.span
        if self._peek().is_kw("else"):
            self._advance()
            if self._peek().is_kw("if"):
                orelse = self._parse_if()
            else:
                orelse = self._parse_block()
            end = orelse.span
        return A.IfStmt(cond, then, orelse, span=start.merge(end))

    def _parse_return(self) -> A.ReturnStmt:
        start = self._advance().span
        tok = self._peek()
        value = None
        end = start
        if not (
            tok.kind in (TokenKind.NEWLINE, TokenKind.EOF) or tok.is_op(";") or tok.is_op("}")
        ):
            value = self._parse_expr()
            end = value.span
        self._terminator()
        return A.ReturnStmt(value, span=start.merge(end))

    def _parse_assign_or_expr(self) -> A.Stmt:
        expr = self._parse_expr()
        if self._peek().is_op("="):
            eq = self._peek()
            if not isinstance(expr, (A.Ident, A.Member, A.Index)):
                raise self._error("P001", "invalid assignment target", eq.span)
            self._advance()
            value = self._parse_expr()
            self._terminator()
            return A.Assign(expr, value, span=expr.span.merge(value.span))
        self._terminator()
        return A.ExprStmt(expr, span=expr.span)

    # ----------------------------------------------------------- expressions

    def _parse_expr(self, min_prec: int = 1) -> A.Expr:
        left = self._parse_unary()
        while True:
            tok = self._peek()
            if tok.kind is not TokenKind.OP:
                break
            prec = BINARY_PRECEDENCE.get(tok.lexeme)
            if prec is None or prec < min_prec:
                break
            self._advance()
            right = self._parse_expr(prec + 1)
            left = A.Binary(tok.lexeme, left, right, span=left.span.merge(right.span))
        return left

    def _parse_unary(self) -> A.Expr:
        tok = self._peek()
        if tok.is_op("-") or tok.is_op("!"):
            self._advance()
            operand = self._parse_unary()
            return A.Unary(tok.lexeme, operand, span=tok.span.merge(operand.span))
        return self._parse_postfix()

    def _parse_postfix(self) -> A.Expr:
        expr = self._parse_primary()
        while True:
            tok = self._peek()
            if tok.is_op("("):
                expr = self._parse_call(expr)
            elif tok.is_op("."):
                self._advance()
                name = self._expect_ident()
                expr = A.Member(expr, name.lexeme, span=expr.span.merge(name.span))
            elif tok.is_op("["):
                self._advance()
                self.nl_depth += 1
                index = self._parse_expr()
                self.nl_depth -= 1
                end = self._expect_op("]").span
                expr = A.Index(expr, index, span=expr.span.merge(end))
            else:
                break
        return expr

    def _parse_call(self, callee: A.Expr) -> A.Call:
        self._advance()  # (
        self.nl_depth += 1
        args: list[A.CallArg] = []
        if not self._peek().is_op(")"):
            while True:
                tok = self._peek()
                if (
                    tok.kind is TokenKind.IDENT or tok.lexeme in CONTEXTUAL_KEYWORDS
                ) and self._peek(1).is_op("="):
                    name_tok = self._advance()
                    self._advance()  # =
                    value = self._parse_expr()
                    args.append(
                        A.CallArg(name_tok.lexeme, value, span=name_tok.span.merge(value.span))
                    )
                else:
                    value = self._parse_expr()
                    args.append(A.CallArg(None, value, span=value.span))
                if self._peek().is_op(","):
                    self._advance()
                    continue
                break
        end = self._expect_op(")").span
        self.nl_depth -= 1
        return A.Call(callee, args, span=callee.span.merge(end))

    def _parse_primary(self) -> A.Expr:
        tok = self._peek()
        if tok.kind is TokenKind.INT:
            self._advance()
            return A.IntLit(tok.value, span=tok.span)
        if tok.kind is TokenKind.FLOAT:
            self._advance()
            return A.FloatLit(tok.value, span=tok.span)
        if tok.kind is TokenKind.STRING:
            self._advance()
            return A.StrLit(tok.value, span=tok.span)
        if tok.is_kw("true") or tok.is_kw("false"):
            self._advance()
            return A.BoolLit(tok.lexeme == "true", span=tok.span)
        if tok.kind is TokenKind.IDENT or (
            tok.kind is TokenKind.KEYWORD and tok.lexeme in CONTEXTUAL_KEYWORDS
        ):
            self._advance()
            return A.Ident(tok.lexeme, span=tok.span)
        if tok.is_op("("):
            self._advance()
            self.nl_depth += 1
            inner = self._parse_expr()
            if self._peek().is_op("="):
                raise self._error("P003", "named argument outside a call", self._peek().span)
            end = self._expect_op(")").span
            self.nl_depth -= 1
            return self._respan(inner, tok.span.merge(end))
        if tok.is_op("["):
            return self._parse_list()
        if tok.is_op("{"):
            return self._parse_record()
        raise self._error("P001", f"unexpected token {describe(tok)}, expected expression", tok.span)

    @staticmethod
    def _respan(expr: A.Expr, span: SourceSpan) -> A.Expr:
        expr.span = span
        return expr

    def _parse_list(self) -> A.ListLit:
        start = self._advance().span  # [
        self.nl_depth += 1
        items: list[A.Expr] = []
        if not self._peek().is_op("]"):
            while True:
                items.append(self._parse_expr())
                if self._peek().is_op(","):
                    self._advance()
                    if self._peek().is_op("]"):
                        break
                    continue
                break
        end = self._expect_op("]").span
        self.nl_depth -= 1
        return A.ListLit(items, span=start.merge(end))

    def _parse_record(self) -> A.RecordLit:
        start = self._advance().span  # {
        self.nl_depth += 1
        pairs: list[tuple[str, A.Expr]] = []
        if not self._peek().is_op("}"):
            while True:
                name = self._expect_ident()
                self._expect_op(":")
                value = self._parse_expr()
                pairs.append((name.lexeme, value))
                if self._peek().is_op(","):
                    self._advance()
                    if self._peek().is_op("}"):
                        break
                    continue
                break
        end = self._expect_op("}").span
        self.nl_depth -= 1
        return A.RecordLit(pairs, span=start.merge(end))


def describe(tok: Token) -> str:
    if tok.kind is TokenKind.EOF:
        return "end of file"
    if tok.kind is TokenKind.NEWLINE:
        return "end of line"
    return f"`{tok.lexeme}`"


def parse(tokens: list[Token], source: str = "") -> tuple[A.Program, list[Diagnostic]]:
    parser = Parser(tokens, source)
    program = parser.parse_program()
    return program, parser.diagnostics


def parse_source(source: str, file_id: int = 0) -> tuple[A.Program, list[Diagnostic]]:
    from .lexer import lex

    tokens, diags = lex(source, file_id)
    if diags:
        return A.Program([], span=A.DUMMY_SPAN), diags
    return parse(tokens, source)
