"""Symbolic path states: SSA versions, call frames, trace and loop counters.

A state is one unmerged path prefix. Every operation returns a new state;
the definition list, path conditions and trace are persistent lists so that
sibling states share their common prefix.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from . import goto as g
from . import syntax as syn
from .bitblast import SsaName
from .syntax import BOOL

DEFAULT_MAX_CALL_DEPTH = 4096


class CallDepthExceeded(Exception):
    pass


class PList:
    """Persistent append-only list with structural sharing."""
    __slots__ = ("item", "parent", "length")

    def __init__(self, item=None, parent=None, length=0):
        self.item = item
        self.parent = parent
        self.length = length

    def append(self, item) -> "PList":
        return PList(item, self, self.length + 1)

    def __len__(self):
        return self.length

    def since(self, k: int) -> list:
        out = []
        node = self
        while node.length > k:
            out.append(node.item)
            node = node.parent
        out.reverse()
        return out

    def __iter__(self):
        return iter(self.since(0))

    def __eq__(self, other):
        if not isinstance(other, PList):
            return NotImplemented
        return self.length == other.length and list(self) == list(other)

    def __repr__(self):
        return f"PList({list(self)!r})"


EMPTY = PList()


@dataclass(frozen=True)
class PathEvent:
    kind: str  # branch | assume | call | return | nondet
    function: str
    instr_index: int
    direction: Optional[bool] = None
    detail: object = None


class Frame(NamedTuple):
    function: str
    return_pc: Optional[int]
    dest_var: Optional[str]
    ordinal: int


@dataclass
class SymbolicState:
    pc: int
    func: str
    frames: tuple
    version_map: dict
    defs: PList = EMPTY
    conds: PList = EMPTY  # (bool SSA expr, polarity) committed on this path
    path_trace: PList = EMPTY
    loop_counters: dict = field(default_factory=dict)
    loop_entries: dict = field(default_factory=dict)
    nondet_inputs: tuple = ()
    next_frame: int = 1
    truncated: bool = False
    mode_ctx: object = field(default=None, compare=False, repr=False)

    @property
    def frame(self) -> int:
        return self.frames[-1].ordinal

    def instruction(self, p: g.GotoProgram):
        return p.functions[self.func].body[self.pc]


def initial_state(p: g.GotoProgram) -> SymbolicState:
    if p.entry not in p.functions:
        raise ValueError("program has no main function")
    return SymbolicState(pc=0, func=p.entry, frames=(Frame(p.entry, None, None, 0),),
                         version_map={})


def _frame_of(s, p, var):
    return 0 if p.is_global(s.func, var) else s.frame


def current_name(s: SymbolicState, p: g.GotoProgram, var: str) -> SsaName:
    fr = _frame_of(s, p, var)
    return SsaName(var, fr, s.version_map.get((var, fr), 0))


def rename(s: SymbolicState, p: g.GotoProgram, expr):
    """Rewrite IR variables into their current SSA names."""
    if isinstance(expr, (syn.IntLit, syn.BoolLit)):
        return expr
    if isinstance(expr, syn.Var):
        return syn.Var(current_name(s, p, expr.name), expr.ty)
    if isinstance(expr, syn.Unary):
        return syn.Unary(expr.op, rename(s, p, expr.operand), expr.ty)
    if isinstance(expr, syn.Binary):
        return syn.Binary(expr.op, rename(s, p, expr.left), rename(s, p, expr.right), expr.ty)
    raise TypeError(f"not a pure IR expression: {expr!r}")


def _define(s, p, var, ssa_expr, frame=None):
    fr = frame if frame is not None else _frame_of(s, p, var)
    version = s.version_map.get((var, fr), 0) + 1
    vm = dict(s.version_map)
    vm[(var, fr)] = version
    name = SsaName(var, fr, version)
    return name, vm, s.defs.append((name, ssa_expr))


def assign(s: SymbolicState, p: g.GotoProgram, var: str, expr) -> SymbolicState:
    _, vm, defs = _define(s, p, var, rename(s, p, expr))
    return dataclasses.replace(s, version_map=vm, defs=defs)


def nondet(s: SymbolicState, p: g.GotoProgram, var: str, kind: str) -> SymbolicState:
    name, vm, defs = _define(s, p, var, syn.Nondet(kind))
    event = PathEvent("nondet", s.func, s.pc, detail=name)
    return dataclasses.replace(s, version_map=vm, defs=defs,
                               nondet_inputs=s.nondet_inputs + (name,),
                               path_trace=s.path_trace.append(event))


def advance(s: SymbolicState, p: g.GotoProgram, target: int, unwind=None) -> SymbolicState:
    """Move to ``target`` in the current function, maintaining loop counters."""
    heads = p.functions[s.func].loop_heads
    if target not in heads:
        return dataclasses.replace(s, pc=target)
    fr = s.frame
    if target <= s.pc:
        entry = s.loop_entries.get((target, fr), 0)
        key = (target, fr, entry)
        counters = dict(s.loop_counters)
        counters[key] = counters.get(key, 0) + 1
        truncated = s.truncated or (unwind is not None and counters[key] > unwind)
        return dataclasses.replace(s, pc=target, loop_counters=counters, truncated=truncated)
    entries = dict(s.loop_entries)
    entries[(target, fr)] = entries.get((target, fr), 0) + 1
    return dataclasses.replace(s, pc=target, loop_entries=entries)


def fork(s: SymbolicState, p: g.GotoProgram, b: g.Branch, unwind=None, cond=None):
    """Both successors of a BRANCH; feasibility is decided by the caller."""
    if cond is None:
        cond = rename(s, p, b.cond)
    children = []
    for direction, target in ((True, b.target_true), (False, b.target_false)):
        event = PathEvent("branch", s.func, s.pc, direction)
        child = dataclasses.replace(s, conds=s.conds.append((cond, direction)),
                                    path_trace=s.path_trace.append(event))
        children.append(advance(child, p, target, unwind))
    return children[0], children[1]


def commit_assume(s: SymbolicState, p: g.GotoProgram, cond=None, unwind=None) -> SymbolicState:
    if cond is None:
        cond = rename(s, p, s.instruction(p).cond)
    event = PathEvent("assume", s.func, s.pc)
    s = dataclasses.replace(s, conds=s.conds.append((cond, True)),
                            path_trace=s.path_trace.append(event))
    return advance(s, p, s.pc + 1, unwind)


def commit_assert(s: SymbolicState, p: g.GotoProgram, cond=None, unwind=None) -> SymbolicState:
    """Record an assertion proven to hold on this path and step past it."""
    if cond is None:
        cond = rename(s, p, s.instruction(p).cond)
    s = dataclasses.replace(s, conds=s.conds.append((cond, True)))
    return advance(s, p, s.pc + 1, unwind)


def enter_call(s: SymbolicState, p: g.GotoProgram, call: g.Call,
               max_call_depth=DEFAULT_MAX_CALL_DEPTH) -> SymbolicState:
    if len(s.frames) >= max_call_depth:
        raise CallDepthExceeded(f"call depth exceeds {max_call_depth} at {call.callee}")
    callee = p.functions[call.callee]
    if len(callee.params) != len(call.args):
        raise ValueError(f"arity mismatch calling {call.callee}")
    ordinal = s.next_frame
    vm = dict(s.version_map)
    defs = s.defs
    for param, arg in zip(callee.params, call.args):
        value = rename(s, p, arg)  # arguments are evaluated in the caller frame
        version = vm.get((param, ordinal), 0) + 1
        vm[(param, ordinal)] = version
        defs = defs.append((SsaName(param, ordinal, version), value))
    frame = Frame(call.callee, s.pc + 1, call.dest, ordinal)
    event = PathEvent("call", s.func, s.pc, detail=call.callee)
    return dataclasses.replace(s, pc=0, func=call.callee, frames=s.frames + (frame,),
                               version_map=vm, defs=defs, next_frame=ordinal + 1,
                               path_trace=s.path_trace.append(event))


def exit_call(s: SymbolicState, p: g.GotoProgram, ret: g.Return) -> SymbolicState:
    if len(s.frames) < 2:
        raise ValueError("exit_call from the outermost frame")
    callee = p.functions[s.func]
    if ret.expr is not None:
        value = rename(s, p, ret.expr)
    elif callee.return_type == BOOL:
        value = syn.BoolLit(False)
    else:
        value = syn.IntLit(0)
    top = s.frames[-1]
    event = PathEvent("return", s.func, s.pc, detail=top.function)
    caller = dataclasses.replace(s, pc=top.return_pc, func=s.frames[-2].function,
                                 frames=s.frames[:-1],
                                 path_trace=s.path_trace.append(event))
    if top.dest_var is not None:
        _, vm, defs = _define(caller, p, top.dest_var, value)
        caller = dataclasses.replace(caller, version_map=vm, defs=defs)
    return caller


def is_final(s: SymbolicState, p: g.GotoProgram) -> bool:
    ins = s.instruction(p)
    return isinstance(ins, g.Halt) or (isinstance(ins, g.Return) and len(s.frames) == 1)


QUERY_POINTS = (g.Branch, g.Assume, g.Assert)


def step(s: SymbolicState, p: g.GotoProgram, unwind=None,
         max_call_depth=DEFAULT_MAX_CALL_DEPTH) -> SymbolicState:
    """Execute one straight-line instruction (no solver involvement)."""
    ins = s.instruction(p)
    if isinstance(ins, g.Assign):
        return advance(assign(s, p, ins.var, ins.expr), p, s.pc + 1, unwind)
    if isinstance(ins, g.Nondet):
        return advance(nondet(s, p, ins.var, ins.kind), p, s.pc + 1, unwind)
    if isinstance(ins, g.Goto):
        return advance(s, p, ins.target, unwind)
    if isinstance(ins, g.Call):
        return enter_call(s, p, ins, max_call_depth)
    if isinstance(ins, g.Return):
        out = exit_call(s, p, ins)
        return advance(dataclasses.replace(out, pc=out.pc - 1), p, out.pc, unwind)
    raise ValueError(f"{g.opcode(ins)} is not a straight-line instruction")


def replay(p: g.GotoProgram, trace, unwind=None, run_to_end=False,
           max_call_depth=DEFAULT_MAX_CALL_DEPTH) -> SymbolicState:
    """Rebuild a state from its path trace by re-stepping the program.

    Stops right after the last event, or at the end of the path when
    ``run_to_end`` is set.
    """
    events = list(trace)
    k = 0
    s = initial_state(p)
    while True:
        if k == len(events) and not run_to_end:
            return s
        if is_final(s, p):
            if k != len(events):
                raise ValueError("trace is longer than the path")
            return s
        ins = s.instruction(p)
        if isinstance(ins, g.Branch):
            ev = events[k]
            k += 1
            t, f = fork(s, p, ins, unwind)
            s = t if ev.direction else f
        elif isinstance(ins, g.Assume):
            s = commit_assume(s, p, unwind=unwind)
            k += 1
        elif isinstance(ins, g.Assert):
            s = commit_assert(s, p, unwind=unwind)
        else:
            before = len(s.path_trace)
            s = step(s, p, unwind, max_call_depth)
            k += len(s.path_trace) - before
        if s.truncated:
            return s
