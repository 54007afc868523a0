"""MiniC abstract syntax tree and pretty-printer.

Expression nodes are frozen (hashable) because the same classes are reused
for the GOTO IR and for SSA-renamed path expressions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

INT = "int"
BOOL = "bool"
VOID = "void"


@dataclass(frozen=True)
class IntLit:
    value: int
    ty: str = INT
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BoolLit:
    value: bool
    ty: str = BOOL
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    # source name in the AST; resolved unique name in the IR; SsaName on paths
    name: object
    ty: Optional[str] = None
    uid: Optional[str] = None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    ty: Optional[str] = None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    ty: Optional[str] = None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple = ()
    ty: Optional[str] = None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Nondet:
    kind: str  # "int" or "bool"
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    @property
    def ty(self):
        return self.kind


Expr = Union[IntLit, BoolLit, Var, Unary, Binary, Call, Nondet]


# -- statements ---------------------------------------------------------------

@dataclass
class VarDecl:
    name: str
    ty: str
    init: Optional[Expr] = None
    uid: Optional[str] = None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass
class Assign:
    name: str
    expr: Expr
    uid: Optional[str] = None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass
class If:
    cond: Expr
    then: list
    orelse: Optional[list] = None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass
class While:
    cond: Expr
    body: list
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass
class Assert:
    cond: Expr
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass
class Assume:
    cond: Expr
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass
class ExprStmt:
    call: Call
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass
class Return:
    expr: Optional[Expr] = None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass
class Block:
    body: list
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass
class Param:
    name: str
    ty: str
    uid: Optional[str] = None


@dataclass
class FunctionDecl:
    name: str
    params: list
    return_type: str
    body: list
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass
class Program:
    functions: list
    globals: list = field(default_factory=list)
    warnings: list = field(default_factory=list, compare=False)

    def function(self, name):
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)


# -- pretty printing ------------------------------------------------------------

def format_expr(e) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Var):
        return str(e.name)
    if isinstance(e, Unary):
        inner = format_expr(e.operand)
        if isinstance(e.operand, (Var, BoolLit)) or (
            isinstance(e.operand, IntLit) and e.operand.value >= 0 and e.op != "-"
        ):
            return f"{e.op}{inner}"
        return f"{e.op}({inner})"
    if isinstance(e, Binary):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, Nondet):
        return f"nondet_{e.kind}()"
    raise TypeError(f"not an expression: {e!r}")


def _format_block(stmts, indent):
    lines = []
    for s in stmts:
        lines.extend(_format_stmt(s, indent))
    return lines


def _format_stmt(s, indent):
    pad = "    " * indent
    if isinstance(s, VarDecl):
        init = f" = {format_expr(s.init)}" if s.init is not None else ""
        return [f"{pad}{s.ty} {s.name}{init};"]
    if isinstance(s, Assign):
        return [f"{pad}{s.name} = {format_expr(s.expr)};"]
    if isinstance(s, If):
        out = [f"{pad}if ({format_expr(s.cond)}) {{"]
        out += _format_block(s.then, indent + 1)
        if s.orelse is not None:
            out.append(f"{pad}}} else {{")
            out += _format_block(s.orelse, indent + 1)
        out.append(f"{pad}}}")
        return out
    if isinstance(s, While):
        out = [f"{pad}while ({format_expr(s.cond)}) {{"]
        out += _format_block(s.body, indent + 1)
        out.append(f"{pad}}}")
        return out
    if isinstance(s, Assert):
        return [f"{pad}assert({format_expr(s.cond)});"]
    if isinstance(s, Assume):
        return [f"{pad}assume({format_expr(s.cond)});"]
    if isinstance(s, ExprStmt):
        return [f"{pad}{format_expr(s.call)};"]
    if isinstance(s, Return):
        if s.expr is None:
            return [f"{pad}return;"]
        return [f"{pad}return {format_expr(s.expr)};"]
    if isinstance(s, Block):
        return [f"{pad}{{"] + _format_block(s.body, indent + 1) + [f"{pad}}}"]
    raise TypeError(f"not a statement: {s!r}")


def pretty(program: Program) -> str:
    lines = []
    for g in program.globals:
        lines.extend(_format_stmt(g, 0))
    for f in program.functions:
        params = ", ".join(f"{p.ty} {p.name}" for p in f.params)
        lines.append(f"{f.return_type} {f.name}({params}) {{")
        lines.extend(_format_block(f.body, 1))
        lines.append("}")
    return "\n".join(lines) + "\n"
