"""Brute-force concrete interpreters: the independent ground truth.

``run_concrete`` steps a GotoProgram instruction by instruction with native
fixed-width arithmetic. ``run_ast`` walks the typed AST directly and exists
only to check that lowering preserves semantics.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import goto as g
from . import syntax as syn
from .arith import binary_op, div_mod_semantics, shift_amount, unary_op, wrap
from .syntax import BOOL

DEFAULT_STEP_LIMIT = 10 ** 6
DEFAULT_CALL_DEPTH = 4096

VIOLATION = "violation"
EXIT = "exit"
STEP_LIMIT = "step-limit"
BLOCKED = "blocked"  # an assume() failed; the run is not a real execution


class InputExhausted(Exception):
    pass


class EnumerationError(Exception):
    pass


@dataclass
class ConcreteResult:
    outcome: str
    env: dict
    location: Optional[tuple] = None  # (function, index, line) of a failed assert
    steps: int = 0
    inputs_used: int = 0
    return_value: object = None


@dataclass
class OracleVerdict:
    outcome: str  # SAFE | UNSAFE | STEP_LIMIT
    inputs: Optional[tuple] = None
    location: Optional[tuple] = None
    runs: int = 0

    def to_dict(self):
        return {
            "outcome": self.outcome,
            "inputs": list(self.inputs) if self.inputs is not None else None,
            "location": list(self.location) if self.location is not None else None,
            "runs": self.runs,
        }


def _input_value(raw, kind, width):
    if kind == BOOL:
        return bool(raw & 1) if not isinstance(raw, bool) else raw
    return wrap(int(raw), width)


# -- expression compilation -------------------------------------------------------

def _compile(e, is_global, width):
    if isinstance(e, syn.IntLit):
        v = wrap(e.value, width)
        return lambda l, gl: v
    if isinstance(e, syn.BoolLit):
        v = e.value
        return lambda l, gl: v
    if isinstance(e, syn.Var):
        name = e.name
        default = False if e.ty == BOOL else 0
        if is_global(name):
            return lambda l, gl: gl.get(name, default)
        return lambda l, gl: l.get(name, default)
    if isinstance(e, syn.Unary):
        f = _compile(e.operand, is_global, width)
        op = e.op
        if op == "!":
            return lambda l, gl: not f(l, gl)
        return lambda l, gl: unary_op(op, f(l, gl), width)
    if isinstance(e, syn.Binary):
        a = _compile(e.left, is_global, width)
        b = _compile(e.right, is_global, width)
        op = e.op
        if e.left.ty == BOOL:
            if op in ("&", "&&"):
                return lambda l, gl: bool(a(l, gl)) and bool(b(l, gl))
            if op in ("|", "||"):
                return lambda l, gl: bool(a(l, gl)) or bool(b(l, gl))
            if op in ("^", "!="):
                return lambda l, gl: bool(a(l, gl)) != bool(b(l, gl))
            if op == "==":
                return lambda l, gl: bool(a(l, gl)) == bool(b(l, gl))
        if op == "+":
            return lambda l, gl: wrap(a(l, gl) + b(l, gl), width)
        if op == "-":
            return lambda l, gl: wrap(a(l, gl) - b(l, gl), width)
        if op == "<":
            return lambda l, gl: a(l, gl) < b(l, gl)
        if op == "==":
            return lambda l, gl: a(l, gl) == b(l, gl)
        return lambda l, gl: binary_op(op, a(l, gl), b(l, gl), width)
    raise AssertionError(f"not a pure expression: {e!r}")


class _Compiled:
    def __init__(self, p: g.GotoProgram, width: int):
        self.width = width
        self.functions = {}
        for name, f in p.functions.items():
            def is_global(v, f=f):
                return v not in f.var_types
            code = []
            for i, ins in enumerate(f.body):
                c = lambda e: _compile(e, is_global, width)  # noqa: E731
                if isinstance(ins, g.Assign):
                    code.append(("assign", ins.var, is_global(ins.var), c(ins.expr)))
                elif isinstance(ins, g.Branch):
                    code.append(("branch", c(ins.cond), ins.target_true, ins.target_false))
                elif isinstance(ins, g.Goto):
                    code.append(("goto", ins.target, None, None))
                elif isinstance(ins, g.Assert):
                    code.append(("assert", c(ins.cond), (name, i, ins.line), None))
                elif isinstance(ins, g.Assume):
                    code.append(("assume", c(ins.cond), None, None))
                elif isinstance(ins, g.Call):
                    callee = p.functions[ins.callee]
                    code.append(("call", ins, [c(a) for a in ins.args], callee.params))
                elif isinstance(ins, g.Return):
                    code.append(("return", c(ins.expr) if ins.expr is not None else None,
                                 f.return_type, None))
                elif isinstance(ins, g.Halt):
                    code.append(("halt", None, None, None))
                elif isinstance(ins, g.Nondet):
                    code.append(("nondet", ins.var, is_global(ins.var), ins.kind))
                else:
                    raise AssertionError(ins)
            self.functions[name] = code


def _compiled(p, width):
    cache = p.__dict__.setdefault("_oracle_cache", {})
    if width not in cache:
        cache[width] = _Compiled(p, width)
    return cache[width]


def run_concrete(p: g.GotoProgram, inputs, width: int, step_limit=DEFAULT_STEP_LIMIT,
                 max_call_depth=DEFAULT_CALL_DEPTH) -> ConcreteResult:
    """Execute ``p`` on concrete nondet ``inputs`` (consumed in execution order)."""
    prog = _compiled(p, width)
    inputs = list(inputs)
    used = 0
    genv = {}
    lenv = {}
    func = p.entry
    code = prog.functions[func]
    pc = 0
    stack = []
    steps = 0
    while True:
        steps += 1
        if steps > step_limit:
            return ConcreteResult(STEP_LIMIT, {}, None, steps - 1, used)
        kind, a, b, c = code[pc]
        if kind == "assign":
            (genv if b else lenv)[a] = c(lenv, genv)
            pc += 1
        elif kind == "branch":
            pc = b if a(lenv, genv) else c
        elif kind == "goto":
            pc = a
        elif kind == "assert":
            if not a(lenv, genv):
                return ConcreteResult(VIOLATION, {}, b, steps, used)
            pc += 1
        elif kind == "assume":
            if not a(lenv, genv):
                return ConcreteResult(BLOCKED, {}, None, steps, used)
            pc += 1
        elif kind == "nondet":
            if used >= len(inputs):
                raise InputExhausted(f"nondet #{used} in {func} at {pc} has no input")
            (genv if b else lenv)[a] = _input_value(inputs[used], c, width)
            used += 1
            pc += 1
        elif kind == "call":
            ins = a
            callee_env = {param: f(lenv, genv) for param, f in zip(c, b)}
            if len(stack) + 1 >= max_call_depth:
                return ConcreteResult(STEP_LIMIT, {}, None, steps, used)
            stack.append((func, code, pc + 1, lenv, ins.dest))
            func = ins.callee
            code = prog.functions[func]
            lenv = callee_env
            pc = 0
        elif kind == "return":
            if a is not None:
                value = a(lenv, genv)
            else:
                value = False if b == BOOL else 0
            if not stack:
                env = dict(genv)
                env.update(lenv)
                return ConcreteResult(EXIT, env, None, steps, used, value)
            func, code, pc, lenv, dest = stack.pop()
            if dest is not None:
                if dest in p.functions[func].var_types:
                    lenv[dest] = value
                else:
                    genv[dest] = value
        elif kind == "halt":
            env = dict(genv)
            env.update(lenv)
            return ConcreteResult(EXIT, env, None, steps, used)
        else:
            raise AssertionError(kind)


def enumerate_verdict(p: g.GotoProgram, width: int, max_inputs: int,
                      step_limit=DEFAULT_STEP_LIMIT) -> OracleVerdict:
    """Exhaustively run every input tuple in lexicographic order.

    Tuples that agree on the inputs a run actually consumed are skipped, which
    keeps the enumeration exact while avoiding redundant runs.
    """
    base = 1 << width
    digits = [0] * max_inputs
    runs = 0
    hit_limit = False
    while True:
        inputs = [wrap(d, width) for d in digits]
        try:
            res = run_concrete(p, inputs, width, step_limit)
        except InputExhausted:
            raise EnumerationError(
                f"program consumes more than {max_inputs} nondet inputs on some path") from None
        runs += 1
        if res.outcome == VIOLATION:
            return OracleVerdict("UNSAFE", tuple(inputs[:res.inputs_used]), res.location, runs)
        if res.outcome == STEP_LIMIT:
            hit_limit = True
        pos = res.inputs_used - 1
        while pos >= 0:
            digits[pos] += 1
            if digits[pos] < base:
                break
            digits[pos] = 0
            pos -= 1
        if pos < 0:
            break
        for j in range(pos + 1, max_inputs):
            digits[j] = 0
    return OracleVerdict("STEP_LIMIT" if hit_limit else "SAFE", None, None, runs)


def replay_witness(p: g.GotoProgram, w, width: Optional[int] = None,
                   step_limit=DEFAULT_STEP_LIMIT) -> bool:
    """True iff the witness inputs drive ``p`` into the recorded failing assert."""
    width = width if width is not None else w.width
    inputs = [int(item["value"]) for item in w.nondet_inputs]
    res = run_concrete(p, inputs, width, step_limit)
    if res.outcome != VIOLATION:
        return False
    func, index = w.assert_location[0], w.assert_location[1]
    return res.location[0] == func and res.location[1] == index


# -- tree-walking AST interpreter --------------------------------------------------

class _ReturnSignal(Exception):
    def __init__(self, value):
        self.value = value


class _Stop(Exception):
    def __init__(self, outcome, line=None):
        self.outcome = outcome
        self.line = line


@dataclass
class _AstRun:
    program: syn.Program
    inputs: list
    width: int
    step_limit: int
    used: int = 0
    steps: int = 0
    genv: dict = field(default_factory=dict)
    gtypes: dict = field(default_factory=dict)

    def tick(self):
        self.steps += 1
        if self.steps > self.step_limit:
            raise _Stop(STEP_LIMIT)

    def read(self, env, uid, ty):
        default = False if ty == BOOL else 0
        if uid in self.gtypes:
            return self.genv.get(uid, default)
        return env.get(uid, default)

    def write(self, env, uid, value):
        if uid in self.gtypes:
            self.genv[uid] = value
        else:
            env[uid] = value

    def eval(self, e, env):
        W = self.width
        if isinstance(e, syn.IntLit):
            return wrap(e.value, W)
        if isinstance(e, syn.BoolLit):
            return e.value
        if isinstance(e, syn.Var):
            return self.read(env, e.uid, e.ty)
        if isinstance(e, syn.Nondet):
            if self.used >= len(self.inputs):
                raise InputExhausted("AST run ran out of inputs")
            v = _input_value(self.inputs[self.used], e.kind, W)
            self.used += 1
            return v
        if isinstance(e, syn.Call):
            args = [self.eval(a, env) for a in e.args]
            return self.call(e.name, args)
        if isinstance(e, syn.Unary):
            return unary_op(e.op, self.eval(e.operand, env), W)
        if isinstance(e, syn.Binary):
            if e.op == "&&":
                return bool(self.eval(e.left, env)) and bool(self.eval(e.right, env))
            if e.op == "||":
                return bool(self.eval(e.left, env)) or bool(self.eval(e.right, env))
            a = self.eval(e.left, env)
            b = self.eval(e.right, env)
            if e.left.ty == BOOL:
                a, b = bool(a), bool(b)
            return binary_op(e.op, a, b, W)
        raise AssertionError(e)

    def call(self, name, args):
        f = self.program.function(name)
        env = {p.uid: v for p, v in zip(f.params, args)}
        try:
            self.block(f.body, env)
        except _ReturnSignal as r:
            return r.value
        return False if f.return_type == BOOL else 0

    def block(self, stmts, env):
        for s in stmts:
            self.stmt(s, env)

    def stmt(self, s, env):
        self.tick()
        if isinstance(s, syn.VarDecl):
            if s.init is not None:
                self.write(env, s.uid, self.eval(s.init, env))
        elif isinstance(s, syn.Assign):
            self.write(env, s.uid, self.eval(s.expr, env))
        elif isinstance(s, syn.If):
            if self.eval(s.cond, env):
                self.block(s.then, env)
            elif s.orelse is not None:
                self.block(s.orelse, env)
        elif isinstance(s, syn.While):
            while self.eval(s.cond, env):
                self.tick()
                self.block(s.body, env)
        elif isinstance(s, syn.Assert):
            if not self.eval(s.cond, env):
                raise _Stop(VIOLATION, s.line)
        elif isinstance(s, syn.Assume):
            if not self.eval(s.cond, env):
                raise _Stop(BLOCKED)
        elif isinstance(s, syn.ExprStmt):
            self.eval(s.call, env)
        elif isinstance(s, syn.Return):
            value = self.eval(s.expr, env) if s.expr is not None else None
            raise _ReturnSignal(value)
        elif isinstance(s, syn.Block):
            self.block(s.body, env)
        else:
            raise AssertionError(s)


def run_ast(program: syn.Program, inputs, width: int, step_limit=100_000) -> ConcreteResult:
    """Tree-walking reference run; final env holds globals and main's locals."""
    run = _AstRun(program, list(inputs), width, step_limit)
    run.gtypes = {gd.uid: gd.ty for gd in program.globals}
    main = program.function("main")
    env = {}
    try:
        for gd in program.globals:
            if gd.init is not None:
                run.write(env, gd.uid, run.eval(gd.init, env))
        run.block(main.body, env)
        value = None
    except _ReturnSignal as r:
        value = r.value
    except _Stop as stop:
        loc = ("main", None, stop.line) if stop.line is not None else None
        return ConcreteResult(stop.outcome, {}, loc, run.steps, run.used)
    except RecursionError:
        return ConcreteResult(STEP_LIMIT, {}, None, run.steps, run.used)
    final = dict(run.genv)
    final.update(env)
    return ConcreteResult(EXIT, final, None, run.steps, run.used, value)


__all__ = [
    "ConcreteResult", "OracleVerdict", "InputExhausted", "EnumerationError",
    "run_concrete", "enumerate_verdict", "replay_witness", "run_ast",
    "div_mod_semantics", "shift_amount",
]
