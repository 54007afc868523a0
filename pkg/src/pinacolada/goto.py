"""GOTO program: a flat, branch-explicit instruction list per function."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import syntax as syn
from .syntax import BOOL, INT, VOID, BoolLit, Var, format_expr


@dataclass
class Assign:
    var: str
    expr: object
    line: int = 0


@dataclass
class Branch:
    cond: object
    target_true: object
    target_false: object
    line: int = 0


@dataclass
class Goto:
    target: object
    line: int = 0


@dataclass
class Assert:
    cond: object
    line: int = 0


@dataclass
class Assume:
    cond: object
    line: int = 0


@dataclass
class Call:
    dest: Optional[str]
    callee: str
    args: tuple
    line: int = 0


@dataclass
class Return:
    expr: object = None
    line: int = 0
    synthetic: bool = False


@dataclass
class Halt:
    line: int = 0


@dataclass
class Nondet:
    var: str
    kind: str
    line: int = 0


@dataclass
class GotoFunction:
    name: str
    params: list
    locals: list
    body: list
    loop_heads: frozenset
    return_type: str
    var_types: dict


@dataclass
class GotoProgram:
    functions: dict
    globals: list = field(default_factory=list)
    var_types: dict = field(default_factory=dict)
    entry: str = "main"

    def type_of(self, func, var):
        f = self.functions[func]
        if var in f.var_types:
            return f.var_types[var]
        return self.var_types[var]

    def is_global(self, func, var):
        return var not in self.functions[func].var_types


@dataclass(frozen=True)
class ReachabilityWarning:
    function: str
    index: int
    line: int
    message: str


class _Label:
    __slots__ = ("index",)

    def __init__(self):
        self.index = None


def _has_call(e) -> bool:
    if isinstance(e, syn.Call):
        return True
    if isinstance(e, syn.Unary):
        return _has_call(e.operand)
    if isinstance(e, syn.Binary):
        return _has_call(e.left) or _has_call(e.right)
    return False


def _is_literal(e) -> bool:
    return isinstance(e, (syn.IntLit, syn.BoolLit))


class _FunctionLowerer:
    def __init__(self, decl: syn.FunctionDecl, globals_: dict):
        self.decl = decl
        self.globals = globals_
        self.body = []
        self.var_types = {}
        self.temp_count = 0
        self.label_at_end = -1

    def emit(self, instr):
        self.body.append(instr)
        return instr

    def place(self, label):
        label.index = len(self.body)
        self.label_at_end = len(self.body)

    def falls_through(self):
        if not self.body or self.label_at_end == len(self.body):
            return True
        return not isinstance(self.body[-1], (Return, Goto, Halt))

    def temp(self, ty, hint="t"):
        self.temp_count += 1
        name = f"${hint}{self.temp_count}"
        self.var_types[name] = ty
        return name

    # -- expressions --

    def value(self, e):
        """Lower ``e`` to a side-effect-free IR expression."""
        if isinstance(e, (syn.IntLit, syn.BoolLit)):
            return e
        if isinstance(e, syn.Var):
            return Var(e.uid, e.ty, line=e.line, column=e.column)
        if isinstance(e, syn.Nondet):
            t = self.temp(e.kind, "nondet")
            self.emit(Nondet(t, e.kind, e.line))
            return Var(t, e.kind)
        if isinstance(e, syn.Call):
            args = self.args(e.args)
            t = self.temp(e.ty, "ret")
            self.emit(Call(t, e.name, args, e.line))
            return Var(t, e.ty)
        if isinstance(e, syn.Unary):
            return syn.Unary(e.op, self.value(e.operand), e.ty, e.line, e.column)
        if isinstance(e, syn.Binary):
            if e.op in ("&&", "||"):
                t = self.temp(BOOL, "sc")
                yes, no, end = _Label(), _Label(), _Label()
                self.cond(e, yes, no)
                self.place(yes)
                self.emit(Assign(t, BoolLit(True), e.line))
                self.emit(Goto(end, e.line))
                self.place(no)
                self.emit(Assign(t, BoolLit(False), e.line))
                self.emit(Goto(end, e.line))
                self.place(end)
                return Var(t, BOOL)
            left = self.value(e.left)
            if _has_call(e.right) and not _is_literal(left):
                # the call may write a global read by the left operand
                t = self.temp(left.ty)
                self.emit(Assign(t, left, e.line))
                left = Var(t, left.ty)
            right = self.value(e.right)
            return syn.Binary(e.op, left, right, e.ty, e.line, e.column)
        raise AssertionError(e)

    def args(self, args):
        out = []
        for k, a in enumerate(args):
            v = self.value(a)
            if any(_has_call(b) for b in args[k + 1:]) and not _is_literal(v):
                t = self.temp(v.ty)
                self.emit(Assign(t, v, getattr(a, "line", 0)))
                v = Var(t, v.ty)
            out.append(v)
        return tuple(out)

    def cond(self, e, yes, no):
        if isinstance(e, syn.Binary) and e.op == "&&":
            mid = _Label()
            self.cond(e.left, mid, no)
            self.place(mid)
            self.cond(e.right, yes, no)
        elif isinstance(e, syn.Binary) and e.op == "||":
            mid = _Label()
            self.cond(e.left, yes, mid)
            self.place(mid)
            self.cond(e.right, yes, no)
        elif isinstance(e, syn.Unary) and e.op == "!":
            self.cond(e.operand, no, yes)
        else:
            self.emit(Branch(self.value(e), yes, no, e.line))

    # -- statements --

    def assign(self, uid, expr, line):
        if isinstance(expr, syn.Nondet):
            self.emit(Nondet(uid, expr.kind, line))
        elif isinstance(expr, syn.Call):
            self.emit(Call(uid, expr.name, self.args(expr.args), line))
        else:
            self.emit(Assign(uid, self.value(expr), line))

    def block(self, stmts):
        for s in stmts:
            self.stmt(s)

    def stmt(self, s):
        if isinstance(s, syn.VarDecl):
            self.var_types[s.uid] = s.ty
            if s.init is not None:
                self.assign(s.uid, s.init, s.line)
        elif isinstance(s, syn.Assign):
            self.assign(s.uid, s.expr, s.line)
        elif isinstance(s, syn.If):
            yes, no, end = _Label(), _Label(), _Label()
            self.cond(s.cond, yes, no if s.orelse is not None else end)
            self.place(yes)
            self.block(s.then)
            if self.falls_through():
                self.emit(Goto(end, s.line))
            if s.orelse is not None:
                self.place(no)
                self.block(s.orelse)
                if self.falls_through():
                    self.emit(Goto(end, s.line))
            self.place(end)
        elif isinstance(s, syn.While):
            head, body, exit_ = _Label(), _Label(), _Label()
            self.place(head)
            self.cond(s.cond, body, exit_)
            self.place(body)
            self.block(s.body)
            if self.falls_through():
                self.emit(Goto(head, s.line))
            self.place(exit_)
        elif isinstance(s, (syn.Assert, syn.Assume)):
            cls = Assert if isinstance(s, syn.Assert) else Assume
            self.emit(cls(self.value(s.cond), s.line))
        elif isinstance(s, syn.ExprStmt):
            c = s.call
            self.emit(Call(None, c.name, self.args(c.args), s.line))
        elif isinstance(s, syn.Return):
            expr = self.value(s.expr) if s.expr is not None else None
            self.emit(Return(expr, s.line))
        elif isinstance(s, syn.Block):
            self.block(s.body)
        else:
            raise AssertionError(s)

    def lower(self, prologue=()):
        for p in self.decl.params:
            self.var_types[p.uid] = p.ty
        for g in prologue:
            self.assign(g.uid, g.init, g.line)
        self.block(self.decl.body)
        if self.falls_through():
            self.emit(Return(None, self.decl.line, synthetic=True))
        end = len(self.body)
        for instr in self.body:
            for attr in ("target", "target_true", "target_false"):
                label = getattr(instr, attr, None)
                if isinstance(label, _Label):
                    assert label.index is not None and label.index < end
                    setattr(instr, attr, label.index)
        heads = set()
        for i, instr in enumerate(self.body):
            for t in _targets(instr):
                if t <= i:
                    heads.add(t)
        params = [p.uid for p in self.decl.params]
        locals_ = [v for v in self.var_types if v not in params]
        return GotoFunction(self.decl.name, params, locals_, self.body,
                            frozenset(heads), self.decl.return_type, self.var_types)


def _targets(instr):
    if isinstance(instr, Goto):
        return (instr.target,)
    if isinstance(instr, Branch):
        return (instr.target_true, instr.target_false)
    return ()


def lower(ast: syn.Program) -> GotoProgram:
    globals_ = {g.uid: g.ty for g in ast.globals}
    functions = {}
    for decl in ast.functions:
        prologue = [g for g in ast.globals if g.init is not None] if decl.name == "main" else ()
        functions[decl.name] = _FunctionLowerer(decl, globals_).lower(prologue)
    return GotoProgram(functions, list(globals_), dict(globals_))


def successors(instr, index):
    """Static successors inside the function; literal branch conditions are decided."""
    if isinstance(instr, (Return, Halt)):
        return ()
    if isinstance(instr, Goto):
        return (instr.target,)
    if isinstance(instr, Branch):
        if isinstance(instr.cond, BoolLit):
            return (instr.target_true if instr.cond.value else instr.target_false,)
        return (instr.target_true, instr.target_false)
    if isinstance(instr, Assume) and isinstance(instr.cond, BoolLit) and not instr.cond.value:
        return ()
    return (index + 1,)


def reachable_check(p: GotoProgram) -> list[ReachabilityWarning]:
    warnings = []
    for name, f in p.functions.items():
        seen = {0} if f.body else set()
        stack = list(seen)
        while stack:
            i = stack.pop()
            for j in successors(f.body[i], i):
                if j not in seen and j < len(f.body):
                    seen.add(j)
                    stack.append(j)
        for i, instr in enumerate(f.body):
            if i not in seen and not getattr(instr, "synthetic", False):
                warnings.append(ReachabilityWarning(
                    name, i, instr.line, f"unreachable {opcode(instr)} instruction"))
    return warnings


def opcode(instr) -> str:
    return type(instr).__name__.upper()


def format_instruction(instr) -> str:
    if isinstance(instr, Assign):
        return f"ASSIGN {instr.var} := {format_expr(instr.expr)}"
    if isinstance(instr, Branch):
        return f"BRANCH {format_expr(instr.cond)} ? {instr.target_true} : {instr.target_false}"
    if isinstance(instr, Goto):
        return f"GOTO {instr.target}"
    if isinstance(instr, (Assert, Assume)):
        return f"{opcode(instr)} {format_expr(instr.cond)}"
    if isinstance(instr, Call):
        dest = f"{instr.dest} := " if instr.dest else ""
        return f"CALL {dest}{instr.callee}({', '.join(format_expr(a) for a in instr.args)})"
    if isinstance(instr, Return):
        return "RETURN" if instr.expr is None else f"RETURN {format_expr(instr.expr)}"
    if isinstance(instr, Halt):
        return "HALT"
    if isinstance(instr, Nondet):
        return f"NONDET {instr.var} : {instr.kind}"
    raise AssertionError(instr)


def dump(p: GotoProgram) -> str:
    lines = []
    for name, f in p.functions.items():
        params = ", ".join(f.params)
        lines.append(f"{f.return_type} {name}({params}):")
        for i, instr in enumerate(f.body):
            mark = "  # loop head" if i in f.loop_heads else ""
            lines.append(f"{i}: {format_instruction(instr)}{mark}")
    return "\n".join(lines) + "\n"
