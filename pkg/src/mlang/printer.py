"""Canonical pretty-printer: 4-space indent, one statement per line.
Output re-parses to a structurally identical AST."""

from __future__ import annotations

from . import ast_nodes as A
from .parser import BINARY_PRECEDENCE

INDENT = "    "


def pretty_print(node) -> str:
    if isinstance(node, A.Program):
        return "".join(_item(item, 0) for item in node.items)
    if isinstance(node, A.Expr):
        return _expr(node)
    if isinstance(node, A.Stmt):
        return _item(node, 0)
    raise TypeError(f"cannot print {type(node).__name__}")


def _item(stmt: A.Stmt, depth: int) -> str:
    pad = INDENT * depth
    if isinstance(stmt, A.ImportDecl):
        path = f'"{_escape(stmt.path)}"' if stmt.quoted else stmt.path
        return f"{pad}import {path}\n"
    if isinstance(stmt, A.MetamodelDecl):
        return _model_like(f"metamodel {stmt.name}", stmt.fields, depth)
    if isinstance(stmt, A.ModelDecl):
        head = f"model {stmt.name}"
        if stmt.parent:
            head += f" extends {stmt.parent}"
        return _model_like(head, stmt.fields, depth)
    if isinstance(stmt, A.FuncDecl):
        params = ", ".join(f"{p.name}: {_type_ref(p.type_ref)}" for p in stmt.params)
        ret = f" -> {_type_ref(stmt.return_type)}" if stmt.return_type else ""
        return f"{pad}func {stmt.name}({params}){ret} {_block(stmt.body, depth)}\n"
    if isinstance(stmt, A.ForStmt):
        return f"{pad}for {stmt.var} in {_expr(stmt.iterable)} {_block(stmt.body, depth)}\n"
    if isinstance(stmt, A.IfStmt):
        return pad + _if(stmt, depth) + "\n"
    if isinstance(stmt, A.ReturnStmt):
        if stmt.value is None:
            return f"{pad}return\n"
        return f"{pad}return {_expr(stmt.value)}\n"
    if isinstance(stmt, A.Assign):
        return f"{pad}{_expr(stmt.target)} = {_expr(stmt.value)}\n"
    if isinstance(stmt, A.ExprStmt):
        return f"{pad}{_expr(stmt.expr)}\n"
    raise TypeError(f"cannot print statement {type(stmt).__name__}")


def _model_like(head: str, fields: list[A.FieldDef], depth: int) -> str:
    pad = INDENT * depth
    if not fields:
        return f"{pad}{head} {{}}\n"
    inner = "".join(
        f"{pad}{INDENT}{f.name} = {_expr(f.value)}\n" for f in fields
    )
    return f"{pad}{head} {{\n{inner}{pad}}}\n"


def _block(block: A.Block, depth: int) -> str:
    if not block.stmts:
        return "{}"
    pad = INDENT * depth
    inner = "".join(_item(s, depth + 1) for s in block.stmts)
    return "{\n" + inner + pad + "}"


def _if(stmt: A.IfStmt, depth: int) -> str:
    out = f"if {_expr(stmt.cond)} {_block(stmt.then, depth)}"
    if isinstance(stmt.orelse, A.IfStmt):
        out += f" else {_if(stmt.orelse, depth)}"
    elif isinstance(stmt.orelse, A.Block):
        out += f" else {_block(stmt.orelse, depth)}"
    return out


def _type_ref(t: A.TypeRef) -> str:
    if t.args:
        return f"{t.name}<{', '.join(_type_ref(a) for a in t.args)}>"
    return t.name


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")


def _float_repr(v: float) -> str:
    # shortest representation that round-trips; ensure it lexes as a float
    out = repr(v)
    if "e" not in out and "." not in out and "inf" not in out and "nan" not in out:
        out += ".0"
    return out


def _expr(e: A.Expr, parent_prec: int = 0) -> str:
    if isinstance(e, A.Ident):
        return e.name
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.FloatLit):
        return _float_repr(e.value)
    if isinstance(e, A.StrLit):
        return f'"{_escape(e.value)}"'
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.ListLit):
        return "[" + ", ".join(_expr(x) for x in e.items) + "]"
    if isinstance(e, A.RecordLit):
        return "{" + ", ".join(f"{k}: {_expr(v)}" for k, v in e.pairs) + "}"
    if isinstance(e, A.Binary):
        prec = BINARY_PRECEDENCE[e.op]
        out = f"{_expr(e.left, prec)} {e.op} {_expr(e.right, prec + 1)}"
        if prec < parent_prec:
            return f"({out})"
        return out
    if isinstance(e, A.Unary):
        out = f"{e.op}{_expr(e.operand, 7)}"
        if parent_prec >= 7:  # unary used as a postfix/call base needs parens
            return f"({out})"
        return out
    if isinstance(e, A.Call):
        args = ", ".join(
            f"{a.name} = {_expr(a.value)}" if a.name else _expr(a.value) for a in e.args
        )
        return f"{_expr(e.callee, 7)}({args})"
    if isinstance(e, A.Member):
        return f"{_expr(e.obj, 7)}.{e.name}"
    if isinstance(e, A.Index):
        return f"{_expr(e.obj, 7)}[{_expr(e.index)}]"
    raise TypeError(f"cannot print expression {type(e).__name__}")
