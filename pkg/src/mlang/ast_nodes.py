"""AST node definitions. Every node carries a SourceSpan; structural
equality helpers deliberately ignore spans."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

from .source import SourceSpan

DUMMY_SPAN = SourceSpan(0, 1, 1, 1, 1)


@dataclass
class Node:
    span: SourceSpan = field(default=DUMMY_SPAN, kw_only=True)


# ---------------------------------------------------------------- expressions


@dataclass
class Expr(Node):
    pass


@dataclass
class Ident(Expr):
    name: str
    binding_id: Optional[int] = field(default=None, kw_only=True, compare=False)


@dataclass
class IntLit(Expr):
    value: int


@dataclass
class FloatLit(Expr):
    value: float


@dataclass
class StrLit(Expr):
    value: str


@dataclass
class BoolLit(Expr):
    value: bool


@dataclass
class ListLit(Expr):
    items: list[Expr]


@dataclass
class RecordLit(Expr):
    pairs: list[tuple[str, Expr]]


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass
class Unary(Expr):
    op: str
    operand: Expr


@dataclass
class CallArg(Node):
    name: Optional[str]  # None for positional
    value: Expr


@dataclass
class Call(Expr):
    callee: Expr
    args: list[CallArg]


@dataclass
class Member(Expr):
    obj: Expr
    name: str


@dataclass
class Index(Expr):
    obj: Expr
    index: Expr


# ----------------------------------------------------------------- statements


@dataclass
class Stmt(Node):
    pass


@dataclass
class Block(Node):
    stmts: list[Stmt]


@dataclass
class ForStmt(Stmt):
    var: str
    iterable: Expr
    body: Block


@dataclass
class IfStmt(Stmt):
    cond: Expr
    then: Block
    orelse: Optional[Node]  # Block or nested IfStmt


@dataclass
class ReturnStmt(Stmt):
    value: Optional[Expr]


@dataclass
class Assign(Stmt):
    target: Expr  # Ident, Member, or Index
    value: Expr


@dataclass
class ExprStmt(Stmt):
    expr: Expr


# ---------------------------------------------------------------- items


@dataclass
class TypeRef(Node):
    name: str
    args: list["TypeRef"] = field(default_factory=list)


@dataclass
class Param(Node):
    name: str
    type_ref: TypeRef


@dataclass
class FieldDef(Node):
    name: str
    value: Expr


@dataclass
class ImportDecl(Stmt):
    path: str
    quoted: bool  # import "file.m" vs import name.path


@dataclass
class MetamodelDecl(Stmt):
    name: str
    fields: list[FieldDef]


@dataclass
class ModelDecl(Stmt):
    name: str
    parent: Optional[str]
    fields: list[FieldDef]


@dataclass
class FuncDecl(Stmt):
    name: str
    params: list[Param]
    return_type: Optional[TypeRef]
    body: Block


@dataclass
class Program(Node):
    items: list[Stmt]


# -------------------------------------------------------- structural equality


def ast_equal(a, b) -> bool:
    """Span-blind structural equality over AST nodes."""
    if type(a) is not type(b):
        return False
    if dataclasses.is_dataclass(a):
        for f in dataclasses.fields(a):
            if f.name in ("span", "binding_id"):
                continue
            if not ast_equal(getattr(a, f.name), getattr(b, f.name)):
                return False
        return True
    if isinstance(a, (list, tuple)):
        return len(a) == len(b) and all(ast_equal(x, y) for x, y in zip(a, b))
    return a == b


def walk(node):
    """Yield every AST node in the tree rooted at `node`."""
    if dataclasses.is_dataclass(node) and isinstance(node, Node):
        yield node
        for f in dataclasses.fields(node):
            yield from _walk_value(getattr(node, f.name))


def _walk_value(v):
    if isinstance(v, Node):
        yield from walk(v)
    elif isinstance(v, (list, tuple)):
        for item in v:
            yield from _walk_value(item)
