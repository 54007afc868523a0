"""Lexer, parser and type checker for MiniC."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

from .syntax import (
    BOOL, INT, VOID, Assert, Assign, Assume, Binary, Block, BoolLit, Call,
    ExprStmt, FunctionDecl, If, IntLit, Nondet, Param, Program, Return, Unary,
    Var, VarDecl, While,
)

KEYWORDS = frozenset({
    "int", "bool", "void", "if", "else", "while", "assert", "assume",
    "return", "true", "false", "nondet_int", "nondet_bool",
})
OPERATORS_2 = ("<<", ">>", "<=", ">=", "==", "!=", "&&", "||")
OPERATORS_1 = "+-*/%&|^<>=!~"
PUNCTUATION = "(){};,"

# binding power, lowest first (C precedence)
BINARY_PRECEDENCE = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5,
    "==": 6, "!=": 6, "<": 7, "<=": 7, ">": 7, ">=": 7,
    "<<": 8, ">>": 8, "+": 9, "-": 9, "*": 10, "/": 10, "%": 10,
}
MAX_LITERAL = (1 << 64) - 1


class FrontendError(Exception):
    def __init__(self, line, column, message):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message


class LexError(FrontendError):
    pass


class ParseError(FrontendError):
    def __init__(self, line, column, expected, found):
        super().__init__(line, column, f"expected {expected}, found {found}")
        self.expected = expected
        self.found = found


class TypeCheckError(FrontendError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # keyword | identifier | integer-literal | operator | punctuation
    text: str
    line: int
    column: int


def tokenize(source: str) -> list[Token]:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_col = col
        if c.isascii() and (c.isalpha() or c == "_"):
            j = i
            while j < n and source[j].isascii() and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            kind = "keyword" if text in KEYWORDS else "identifier"
        elif c.isascii() and c.isdigit():
            j = i
            while j < n and source[j].isascii() and source[j].isdigit():
                j += 1
            text = source[i:j]
            kind = "integer-literal"
        elif source[i:i + 2] in OPERATORS_2:
            text, kind, j = source[i:i + 2], "operator", i + 2
        elif c in OPERATORS_1:
            text, kind, j = c, "operator", i + 1
        elif c in PUNCTUATION:
            text, kind, j = c, "punctuation", i + 1
        else:
            raise LexError(line, col, f"unexpected character {c!r}")
        tokens.append(Token(kind, text, line, start_col))
        col += j - i
        i = j
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self, offset=0) -> Optional[Token]:
        k = self.pos + offset
        return self.tokens[k] if k < len(self.tokens) else None

    def _where(self):
        tok = self.peek()
        if tok is not None:
            return tok.line, tok.column, repr(tok.text)
        if self.tokens:
            last = self.tokens[-1]
            return last.line, last.column + len(last.text), "end of input"
        return 1, 1, "end of input"

    def fail(self, expected):
        line, col, found = self._where()
        raise ParseError(line, col, expected, found)

    def at(self, text) -> bool:
        tok = self.peek()
        return tok is not None and tok.text == text and tok.kind != "identifier"

    def expect(self, text) -> Token:
        if not self.at(text):
            self.fail(repr(text))
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def ident(self) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != "identifier":
            self.fail("identifier")
        self.pos += 1
        return tok

    def type_name(self, allow_void=False) -> Token:
        tok = self.peek()
        allowed = (INT, BOOL, VOID) if allow_void else (INT, BOOL)
        if tok is None or tok.kind != "keyword" or tok.text not in allowed:
            self.fail("type name")
        self.pos += 1
        return tok

    # -- top level --

    def program(self) -> Program:
        functions, globals_ = [], []
        while self.peek() is not None:
            ty = self.type_name(allow_void=True)
            name = self.ident()
            if self.at("("):
                functions.append(self.function_rest(ty, name))
            else:
                if ty.text == VOID:
                    raise TypeCheckError(ty.line, ty.column, "variable declared void")
                globals_.append(self.decl_rest(ty, name))
        return Program(functions=functions, globals=globals_)

    def function_rest(self, ty, name) -> FunctionDecl:
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                pty = self.type_name()
                pname = self.ident()
                params.append(Param(pname.text, pty.text))
                if not self.at(","):
                    break
                self.expect(",")
        self.expect(")")
        body = self.block()
        return FunctionDecl(name.text, params, ty.text, body, name.line, name.column)

    def decl_rest(self, ty, name) -> VarDecl:
        init = None
        if self.at("="):
            self.expect("=")
            init = self.expr()
        self.expect(";")
        return VarDecl(name.text, ty.text, init, line=name.line, column=name.column)

    def block(self) -> list:
        self.expect("{")
        body = []
        while not self.at("}"):
            if self.peek() is None:
                self.fail("'}'")
            stmt = self.statement()
            if stmt is not None:
                body.append(stmt)
        self.expect("}")
        return body

    def body(self) -> list:
        if self.at("{"):
            return self.block()
        stmt = self.statement()
        return [] if stmt is None else [stmt]

    def statement(self):
        tok = self.peek()
        if tok is None:
            self.fail("statement")
        if tok.kind == "punctuation" and tok.text == "{":
            return Block(self.block(), tok.line, tok.column)
        if tok.kind == "punctuation" and tok.text == ";":
            self.pos += 1
            return None
        if tok.kind == "keyword":
            if tok.text in (INT, BOOL):
                ty = self.type_name()
                name = self.ident()
                return self.decl_rest(ty, name)
            if tok.text == "if":
                self.pos += 1
                self.expect("(")
                cond = self.expr()
                self.expect(")")
                then = self.body()
                orelse = None
                if self.at("else"):
                    self.pos += 1
                    orelse = self.body()
                return If(cond, then, orelse, tok.line, tok.column)
            if tok.text == "while":
                self.pos += 1
                self.expect("(")
                cond = self.expr()
                self.expect(")")
                return While(cond, self.body(), tok.line, tok.column)
            if tok.text in ("assert", "assume"):
                self.pos += 1
                self.expect("(")
                cond = self.expr()
                self.expect(")")
                self.expect(";")
                cls = Assert if tok.text == "assert" else Assume
                return cls(cond, tok.line, tok.column)
            if tok.text == "return":
                self.pos += 1
                expr = None
                if not self.at(";"):
                    expr = self.expr()
                self.expect(";")
                return Return(expr, tok.line, tok.column)
            self.fail("statement")
        if tok.kind == "identifier":
            nxt = self.peek(1)
            if nxt is not None and nxt.text == "=" and nxt.kind == "operator":
                self.pos += 2
                expr = self.expr()
                self.expect(";")
                return Assign(tok.text, expr, line=tok.line, column=tok.column)
            if nxt is not None and nxt.text == "(" and nxt.kind == "punctuation":
                call = self.primary()
                self.expect(";")
                return ExprStmt(call, tok.line, tok.column)
            self.pos += 1
            self.fail("'=' or '('")
        self.fail("statement")

    # -- expressions --

    def expr(self, min_prec=1):
        left = self.unary()
        while True:
            tok = self.peek()
            if tok is None or tok.kind != "operator":
                return left
            prec = BINARY_PRECEDENCE.get(tok.text)
            if prec is None or prec < min_prec:
                return left
            self.pos += 1
            right = self.expr(prec + 1)
            left = Binary(tok.text, left, right, line=tok.line, column=tok.column)

    def unary(self):
        tok = self.peek()
        if tok is not None and tok.kind == "operator" and tok.text in ("-", "!", "~"):
            self.pos += 1
            nxt = self.peek()
            if tok.text == "-" and nxt is not None and nxt.kind == "integer-literal":
                lit = self.primary()
                return IntLit(-lit.value, line=tok.line, column=tok.column)
            operand = self.unary()
            return Unary(tok.text, operand, line=tok.line, column=tok.column)
        return self.primary()

    def primary(self):
        tok = self.peek()
        if tok is None:
            self.fail("expression")
        if tok.kind == "integer-literal":
            self.pos += 1
            value = int(tok.text)
            if value > MAX_LITERAL:
                raise ParseError(tok.line, tok.column, "integer literal fitting in 64 bits", tok.text)
            return IntLit(value, line=tok.line, column=tok.column)
        if tok.kind == "keyword" and tok.text in ("true", "false"):
            self.pos += 1
            return BoolLit(tok.text == "true", line=tok.line, column=tok.column)
        if tok.kind == "keyword" and tok.text in ("nondet_int", "nondet_bool"):
            self.pos += 1
            self.expect("(")
            self.expect(")")
            return Nondet(tok.text[len("nondet_"):], line=tok.line, column=tok.column)
        if tok.kind == "punctuation" and tok.text == "(":
            self.pos += 1
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "identifier":
            self.pos += 1
            if self.at("("):
                self.expect("(")
                args = []
                if not self.at(")"):
                    while True:
                        args.append(self.expr())
                        if not self.at(","):
                            break
                        self.expect(",")
                self.expect(")")
                return Call(tok.text, tuple(args), line=tok.line, column=tok.column)
            return Var(tok.text, line=tok.line, column=tok.column)
        self.fail("expression")


MAX_NESTING = 200


def _nesting_depth(node) -> tuple:
    """Deepest node chain as (depth, deepest node), computed without recursion."""
    best = (0, node)
    stack = [(node, 1)]
    while stack:
        n, d = stack.pop()
        if d > best[0]:
            best = (d, n)
        for f in dataclasses.fields(n):
            v = getattr(n, f.name)
            items = v if isinstance(v, (list, tuple)) else (v,)
            for item in items:
                if dataclasses.is_dataclass(item) and not isinstance(item, type):
                    stack.append((item, d + 1))
    return best


def parse_untyped(tokens: list[Token]) -> Program:
    parser = _Parser(tokens)
    try:
        program = parser.program()
    except RecursionError:
        line, col, found = parser._where()
        raise ParseError(line, col, f"at most {MAX_NESTING} levels of nesting", found) from None
    depth, node = _nesting_depth(program)
    if depth > MAX_NESTING:
        raise ParseError(getattr(node, "line", None) or 1, getattr(node, "column", None) or 1,
                         f"at most {MAX_NESTING} levels of nesting", "deeper nesting")
    return program


# -- type checking ----------------------------------------------------------------

_ARITH = {"+", "-", "*", "/", "%", "<<", ">>"}
_BITWISE = {"&", "|", "^"}
_ORDER = {"<", "<=", ">", ">="}
_EQUALITY = {"==", "!="}
_LOGIC = {"&&", "||"}


class _Checker:
    def __init__(self, program: Program):
        self.program = program
        self.signatures = {}
        self.globals = {}
        self.warnings = []

    def error(self, node, message):
        raise TypeCheckError(node.line or 1, node.column or 1, message)

    def run(self) -> Program:
        for f in self.program.functions:
            if f.name in self.signatures:
                self.error(f, f"duplicate function {f.name!r}")
            self.signatures[f.name] = ([p.ty for p in f.params], f.return_type)
        mains = [f for f in self.program.functions if f.name == "main"]
        if not mains:
            t = self.program.functions[0] if self.program.functions else None
            line, col = (t.line, t.column) if t else (1, 1)
            raise TypeCheckError(line, col, "missing function 'main'")
        if mains[0].params:
            self.error(mains[0], "'main' must take no parameters")
        scope = [{}]
        new_globals = []
        for g in self.program.globals:
            if g.name in scope[0]:
                self.error(g, f"redeclaration of {g.name!r}")
            init = self.expr(g.init, scope, allow_calls=True) if g.init is not None else None
            if init is not None and init.ty != g.ty:
                self.error(g, f"initializer of {g.name!r} has type {init.ty}, expected {g.ty}")
            scope[0][g.name] = (g.name, g.ty)
            new_globals.append(dataclasses.replace(g, init=init, uid=g.name))
        self.globals = scope[0]
        functions = [self.function(f) for f in self.program.functions]
        return Program(functions=functions, globals=new_globals, warnings=self.warnings)

    def function(self, f: FunctionDecl) -> FunctionDecl:
        self.current = f
        self.used_uids = set(self.globals)
        self.declared_plain = {}
        self.assigned = set()
        params = []
        frame = {}
        for p in f.params:
            if p.name in frame:
                self.error(f, f"duplicate parameter {p.name!r}")
            uid = self.fresh_uid(p.name)
            frame[p.name] = (uid, p.ty)
            params.append(Param(p.name, p.ty, uid))
            self.assigned.add(uid)
        scope = [self.globals, frame]
        body = self.block(f.body, scope)
        for uid, decl in self.declared_plain.items():
            if uid not in self.assigned:
                self.warnings.append(
                    f"{decl.line}:{decl.column}: {decl.name!r} is never assigned; reads yield 0")
        return dataclasses.replace(f, params=params, body=body)

    def fresh_uid(self, name):
        uid, k = name, 0
        while uid in self.used_uids:
            k += 1
            uid = f"{name}.{k}"
        self.used_uids.add(uid)
        return uid

    def lookup(self, node, name, scope):
        for frame in reversed(scope):
            if name in frame:
                return frame[name]
        self.error(node, f"undeclared variable {name!r}")

    def block(self, stmts, scope):
        scope = scope + [{}]
        return [self.stmt(s, scope) for s in stmts]

    def stmt(self, s, scope):
        if isinstance(s, VarDecl):
            if s.name in scope[-1]:
                self.error(s, f"redeclaration of {s.name!r}")
            init = None
            if s.init is not None:
                init = self.expr(s.init, scope, allow_calls=True)
                if init.ty != s.ty:
                    self.error(s, f"initializer of {s.name!r} has type {init.ty}, expected {s.ty}")
            uid = self.fresh_uid(s.name)
            scope[-1][s.name] = (uid, s.ty)
            if init is None:
                self.declared_plain[uid] = s
            else:
                self.assigned.add(uid)
            return dataclasses.replace(s, init=init, uid=uid)
        if isinstance(s, Assign):
            uid, ty = self.lookup(s, s.name, scope)
            expr = self.expr(s.expr, scope, allow_calls=True)
            if expr.ty != ty:
                self.error(s, f"cannot assign {expr.ty} to {ty} variable {s.name!r}")
            self.assigned.add(uid)
            return dataclasses.replace(s, expr=expr, uid=uid)
        if isinstance(s, If):
            cond = self.cond(s.cond, scope)
            then = self.block(s.then, scope)
            orelse = self.block(s.orelse, scope) if s.orelse is not None else None
            return dataclasses.replace(s, cond=cond, then=then, orelse=orelse)
        if isinstance(s, While):
            cond = self.cond(s.cond, scope)
            return dataclasses.replace(s, cond=cond, body=self.block(s.body, scope))
        if isinstance(s, (Assert, Assume)):
            return dataclasses.replace(s, cond=self.cond(s.cond, scope))
        if isinstance(s, ExprStmt):
            return dataclasses.replace(s, call=self.call(s.call, scope, statement=True))
        if isinstance(s, Return):
            rt = self.current.return_type
            if s.expr is None:
                if rt != VOID:
                    self.error(s, f"missing return value in function returning {rt}")
                return s
            if rt == VOID:
                self.error(s, "return with a value in void function")
            expr = self.expr(s.expr, scope, allow_calls=True)
            if expr.ty != rt:
                self.error(s, f"returning {expr.ty} from function returning {rt}")
            return dataclasses.replace(s, expr=expr)
        if isinstance(s, Block):
            return dataclasses.replace(s, body=self.block(s.body, scope))
        raise AssertionError(s)

    def cond(self, e, scope):
        e = self.expr(e, scope, allow_calls=True)
        if e.ty != BOOL:
            self.error(e, f"condition must be bool, found {e.ty}")
        return e

    def call(self, c: Call, scope, statement=False):
        if c.name not in self.signatures:
            self.error(c, f"unknown function {c.name!r}")
        ptys, rt = self.signatures[c.name]
        if len(ptys) != len(c.args):
            self.error(c, f"{c.name!r} expects {len(ptys)} arguments, got {len(c.args)}")
        if c.name == "main":
            self.error(c, "'main' cannot be called")
        args = []
        for a, pty in zip(c.args, ptys):
            a = self.expr(a, scope, allow_calls=True)
            if a.ty != pty:
                self.error(a, f"argument of type {a.ty} passed for {pty} parameter of {c.name!r}")
            args.append(a)
        if rt == VOID and not statement:
            self.error(c, f"void function {c.name!r} used in an expression")
        return dataclasses.replace(c, args=tuple(args), ty=rt)

    def expr(self, e, scope, allow_calls=True):
        if isinstance(e, IntLit):
            return e
        if isinstance(e, BoolLit):
            return e
        if isinstance(e, Nondet):
            return e
        if isinstance(e, Var):
            uid, ty = self.lookup(e, e.name, scope)
            return dataclasses.replace(e, ty=ty, uid=uid)
        if isinstance(e, Call):
            return self.call(e, scope)
        if isinstance(e, Unary):
            operand = self.expr(e.operand, scope)
            want = BOOL if e.op == "!" else INT
            if operand.ty != want:
                self.error(e, f"operator {e.op!r} needs {want}, found {operand.ty}")
            return dataclasses.replace(e, operand=operand, ty=want)
        if isinstance(e, Binary):
            left = self.expr(e.left, scope)
            right = self.expr(e.right, scope)
            lt, rt = left.ty, right.ty
            op = e.op
            if op in _ARITH or op in _ORDER:
                if lt != INT or rt != INT:
                    self.error(e, f"operator {op!r} needs int operands, found {lt} and {rt}")
                ty = INT if op in _ARITH else BOOL
            elif op in _BITWISE or op in _EQUALITY:
                if lt != rt:
                    self.error(e, f"operator {op!r} on mismatched types {lt} and {rt}")
                ty = lt if op in _BITWISE else BOOL
            elif op in _LOGIC:
                if lt != BOOL or rt != BOOL:
                    self.error(e, f"operator {op!r} needs bool operands, found {lt} and {rt}")
                ty = BOOL
            else:
                self.error(e, f"unknown operator {op!r}")
            return dataclasses.replace(e, left=left, right=right, ty=ty)
        raise AssertionError(e)


def check(program: Program) -> Program:
    """Type-check and resolve names; returns a new annotated program."""
    return _Checker(program).run()


def parse(tokens: list[Token]) -> Program:
    return check(parse_untyped(tokens))


def parse_source(source) -> Program:
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8")
        except UnicodeDecodeError as exc:
            prefix = bytes(source)[: exc.start].decode("utf-8", errors="replace")
            line = prefix.count("\n") + 1
            column = len(prefix) - (prefix.rfind("\n") + 1) + 1
            raise LexError(line, column, "invalid UTF-8") from None
    return parse(tokenize(source))
