"""Single-path symbolic exploration with eager infeasibility checks.

Every BRANCH and ASSUME is checked for feasibility as soon as it is reached,
and infeasible successors are dropped before any further stepping. Two
solver disciplines are supported:

* partial incremental: one solver per live path. Path segments are added as
  plain clauses; a state taken from the worklist gets a fresh solver with
  its whole prefix re-encoded.
* full incremental: one solver for the whole run. Each segment between two
  query points is guarded by its own activation literal and a path is
  selected by assuming its activation literals. Abandoned segments are
  switched off with a unit clause, or, in strict mode, by assuming the
  negated literal on every later call.
"""
from __future__ import annotations

import dataclasses
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from . import __version__
from . import goto as g
from . import syntax as syn
from .arith import binary_op, unary_op, wrap
from .bitblast import EncodingContext, LayeredMemo, decode_word
from .sat import SAT, Solver
from .ssa import (
    CallDepthExceeded, SymbolicState, commit_assert, commit_assume, fork,
    initial_state, is_final, rename, step,
)
from .witness import Witness

log = logging.getLogger(__name__)

DFS = "dfs"
BFS = "bfs"
FULL_INCREMENTAL = "full-incremental"
PARTIAL_INCREMENTAL = "partial-incremental"

SAFE = "SAFE"
UNSAFE = "UNSAFE"
RESOURCE_LIMIT = "RESOURCE_LIMIT"

BFS_PI_WARNING = ("BFS with partial-incremental mode retains a solver instance for every "
                  "queued state; this combination is not recommended")


@dataclass
class ExplorerConfig:
    strategy: str = DFS
    mode: str = FULL_INCREMENTAL
    unwind_limit: Optional[int] = None
    max_call_depth: int = 4096
    int_width: int = 32
    stop_at_first_violation: bool = True
    fi_strict_assumptions: bool = False
    max_states: Optional[int] = None
    timeout_sec: Optional[float] = None
    fold_constants: bool = True
    record_queries: bool = False
    record_paths: bool = False
    debug_recheck: bool = False
    solver_seed: Optional[int] = None

    def __post_init__(self):
        if self.strategy not in (DFS, BFS):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.mode not in (FULL_INCREMENTAL, PARTIAL_INCREMENTAL):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.unwind_limit is not None and self.unwind_limit < 1:
            raise ValueError("unwind limit must be positive")


@dataclass
class Stats:
    states_explored: int = 0
    solver_queries: int = 0
    solver_instances_created: int = 0
    max_live_solvers: int = 0
    max_frontier_size: int = 0
    clauses_added: int = 0
    folded_decisions: int = 0
    folded_infeasible: int = 0
    infeasible_queries: int = 0
    assertion_queries: int = 0
    discarded_successors: int = 0
    activation_vars: int = 0
    paths_completed: int = 0
    paths_truncated: int = 0
    paths_infeasible: int = 0


@dataclass
class Verdict:
    outcome: str
    bounded: bool = False
    witness: Optional[Witness] = None
    stats: Stats = field(default_factory=Stats)
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    query_log: list = field(default_factory=list)
    complete_paths: list = field(default_factory=list)
    final_states: list = field(default_factory=list)
    reason: str = ""


@dataclass
class ActivationVar:
    lit: int
    segment: tuple  # (from trace index, to trace index)
    branch: Optional[tuple]  # (function, instr index, direction) opening the segment
    parent: Optional["ActivationVar"] = None
    refs: int = 0

    def chain(self):
        out = []
        node = self
        while node is not None:
            out.append(node.lit)
            node = node.parent
        out.reverse()
        return out


@dataclass
class PiContext:
    solver: Solver
    enc: EncodingContext
    defs_done: int = 0
    conds_done: int = 0


@dataclass
class FiContext:
    memo: LayeredMemo
    act: Optional[ActivationVar] = None
    defs_done: int = 0
    conds_done: int = 0
    trace_done: int = 0


class ResourceLimit(Exception):
    pass


class _Violation(Exception):
    def __init__(self, witness):
        self.witness = witness


def const_value(expr, width):
    """Native value of a variable-free expression, else None."""
    if isinstance(expr, syn.IntLit):
        return wrap(expr.value, width)
    if isinstance(expr, syn.BoolLit):
        return expr.value
    if isinstance(expr, syn.Unary):
        v = const_value(expr.operand, width)
        return None if v is None else unary_op(expr.op, v, width)
    if isinstance(expr, syn.Binary):
        a = const_value(expr.left, width)
        if a is None:
            return None
        b = const_value(expr.right, width)
        if b is None:
            return None
        return binary_op(expr.op, a, b, width)
    return None


def branch_string(trace) -> str:
    return ",".join(f"{e.function}:{e.instr_index}{'T' if e.direction else 'F'}"
                    for e in trace if e.kind == "branch")


class _Explorer:
    def __init__(self, p: g.GotoProgram, cfg: ExplorerConfig):
        self.p = p
        self.cfg = cfg
        self.W = cfg.int_width
        self.stats = Stats()
        self.verdict = Verdict(SAFE, stats=self.stats)
        self.worklist = deque()
        self.live_solvers = 0
        self.deadline = (time.monotonic() + cfg.timeout_sec) if cfg.timeout_sec else None
        self.last_solver = None
        self.disabled = []
        self.pi = cfg.mode == PARTIAL_INCREMENTAL
        if not self.pi:
            self.solver = Solver(cfg.solver_seed)
            self.enc = EncodingContext(self.W, self.solver.new_var, fold=cfg.fold_constants)
            self._add_all(self.solver, self.enc.sink)
            self.enc.sink = []
            self.stats.solver_instances_created = 1
            self.stats.max_live_solvers = 1
            self.last_solver = self.solver
        if self.pi and cfg.strategy == BFS:
            self.verdict.warnings.append(BFS_PI_WARNING)
            log.info(BFS_PI_WARNING)

    # -- bookkeeping --

    def _add_all(self, solver, clauses, guard=None):
        for c in clauses:
            solver.add_clause(c if guard is None else [-guard] + c)
        self.stats.clauses_added += len(clauses)

    def _check_budget(self):
        if self.cfg.max_states is not None and self.stats.states_explored > self.cfg.max_states:
            raise ResourceLimit(f"explored-state budget of {self.cfg.max_states} exceeded")
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise ResourceLimit(f"time budget of {self.cfg.timeout_sec}s exceeded")

    def _frontier(self):
        n = len(self.worklist)
        if n > self.stats.max_frontier_size:
            self.stats.max_frontier_size = n

    def _log(self, kind, state, polarity, result):
        if self.cfg.record_queries:
            self.verdict.query_log.append({
                "kind": kind, "function": state.func, "index": state.pc,
                "polarity": polarity, "result": result,
            })

    def _solve(self, solver, assumptions):
        self.stats.solver_queries += 1
        return solver.solve(assumptions + self.disabled)

    # -- partial incremental --

    def pi_backtrack(self, state) -> PiContext:
        """Fresh solver holding the full prefix of ``state``."""
        solver = Solver(self.cfg.solver_seed)
        enc = EncodingContext(self.W, solver.new_var, fold=self.cfg.fold_constants)
        ctx = PiContext(solver, enc)
        self.stats.solver_instances_created += 1
        self.live_solvers += 1
        self.stats.max_live_solvers = max(self.stats.max_live_solvers, self.live_solvers)
        self.last_solver = solver
        self._pi_flush(state, ctx)
        return ctx

    def _pi_flush(self, state, ctx):
        enc = ctx.enc
        for name, expr in state.defs.since(ctx.defs_done):
            enc.encode_def(name, expr)
        for cond, polarity in state.conds.since(ctx.conds_done):
            lit = enc.encode_bool(cond)
            enc.sink.append([lit if polarity else -lit])
        ctx.defs_done = len(state.defs)
        ctx.conds_done = len(state.conds)
        self._add_all(ctx.solver, enc.sink)
        enc.sink = []

    def _pi_release(self, state):
        if state.mode_ctx is not None:
            self.live_solvers -= 1
            state.mode_ctx = None

    # -- full incremental --

    def fi_commit_segment(self, state, cond=None):
        """Guard the pending segment (and ``cond``'s encoding) by a new activation var.

        Returns the activation var and the root literal of ``cond``.
        """
        ctx = state.mode_ctx
        memo = ctx.memo.child()
        enc = self.enc.view(memo)
        enc.sink = []
        for name, expr in state.defs.since(ctx.defs_done):
            enc.encode_def(name, expr)
        for c, polarity in state.conds.since(ctx.conds_done):
            lit = enc.encode_bool(c)
            enc.sink.append([lit if polarity else -lit])
        root = enc.encode_bool(cond) if cond is not None else None
        a = self.solver.new_var()
        self.stats.activation_vars += 1
        opening = None
        for ev in reversed(state.path_trace.since(ctx.trace_done)):
            if ev.kind == "branch":
                opening = (ev.function, ev.instr_index, ev.direction)
                break
        act = ActivationVar(a, (ctx.trace_done, len(state.path_trace)), opening, ctx.act)
        if ctx.act is not None:
            ctx.act.refs += 1
        self._add_all(self.solver, enc.sink, guard=a)
        new_ctx = FiContext(memo, act, len(state.defs), len(state.conds), len(state.path_trace))
        act.refs += 1
        self._fi_release_act(ctx.act)
        state.mode_ctx = new_ctx
        return act, root

    def _fi_release_act(self, act):
        while act is not None:
            act.refs -= 1
            if act.refs > 0:
                return
            if self.cfg.fi_strict_assumptions:
                self.disabled.append(-act.lit)
            else:
                self.solver.add_clause([-act.lit])
                self.stats.clauses_added += 1
            act = act.parent

    # -- shared --

    def _release(self, state):
        if self.pi:
            self._pi_release(state)
        elif state.mode_ctx is not None:
            self._fi_release_act(state.mode_ctx.act)
            state.mode_ctx = None

    def _share_ctx(self, parent_ctx, child):
        """Give a second feasible child its own context."""
        if self.pi:
            if self.cfg.strategy == BFS:
                child.mode_ctx = self.pi_backtrack(child)
            else:
                child.mode_ctx = None  # rebuilt when popped
        else:
            if parent_ctx.act is not None:
                parent_ctx.act.refs += 1
            child.mode_ctx = dataclasses.replace(parent_ctx)

    def _prepare(self, state, cond):
        """Encode the pending segment; returns (solver, base assumptions, root, memo)."""
        if self.pi:
            if state.mode_ctx is None:
                state.mode_ctx = self.pi_backtrack(state)
            ctx = state.mode_ctx
            self._pi_flush(state, ctx)
            root = ctx.enc.encode_bool(cond) if cond is not None else None
            self._add_all(ctx.solver, ctx.enc.sink)
            ctx.enc.sink = []
            return ctx.solver, [], root, ctx.enc.memo
        act, root = self.fi_commit_segment(state, cond)
        return self.solver, act.chain(), root, state.mode_ctx.memo

    def _recheck(self, state):
        solver = Solver()
        enc = EncodingContext(self.W, solver.new_var)
        for name, expr in state.defs:
            enc.encode_def(name, expr)
        for cond, polarity in state.conds:
            lit = enc.encode_bool(cond)
            enc.sink.append([lit if polarity else -lit])
        for c in enc.sink:
            solver.add_clause(c)
        if solver.solve() != SAT:
            raise AssertionError(f"stepped an infeasible state at {state.func}:{state.pc}")

    def _child(self, state):
        self.stats.states_explored += 1
        if self.cfg.debug_recheck:
            self._recheck(state)
        return state

    # -- query points --

    def branch_feasibility(self, state, cond):
        """(true_feasible, false_feasible, folded) for a renamed condition."""
        if self.cfg.fold_constants:
            v = const_value(cond, self.W)
            if v is not None:
                self.stats.folded_decisions += 1
                return bool(v), not v, True
        solver, base, root, _ = self._prepare(state, cond)
        t = self._solve(solver, base + [root]) == SAT
        self._log("branch", state, True, t)
        f = self._solve(solver, base + [-root]) == SAT
        self._log("branch", state, False, f)
        return t, f, False

    def _branch(self, state, ins):
        cond = rename(state, self.p, ins.cond)
        t_ok, f_ok, folded = self.branch_feasibility(state, cond)
        ctx = state.mode_ctx
        for ok in (t_ok, f_ok):
            if not ok:
                self.stats.discarded_successors += 1
                if folded:
                    self.stats.folded_infeasible += 1
                else:
                    self.stats.infeasible_queries += 1
        if not (t_ok or f_ok):
            self.stats.paths_infeasible += 1
            self._release(state)
            return []
        s_t, s_f = fork(state, self.p, ins, self.cfg.unwind_limit, cond)
        s_t.mode_ctx = s_f.mode_ctx = None
        children = []
        if t_ok:
            s_t.mode_ctx = ctx
            children.append(self._child(s_t))
        if f_ok:
            if t_ok:
                self._share_ctx(ctx, s_f)
            else:
                s_f.mode_ctx = ctx
            children.append(self._child(s_f))
        return children

    def _assume(self, state, ins):
        cond = rename(state, self.p, ins.cond)
        v = const_value(cond, self.W) if self.cfg.fold_constants else None
        if v is not None:
            self.stats.folded_decisions += 1
            ok = bool(v)
            if not ok:
                self.stats.folded_infeasible += 1
        else:
            solver, base, root, _ = self._prepare(state, cond)
            ok = self._solve(solver, base + [root]) == SAT
            self._log("assume", state, True, ok)
            if not ok:
                self.stats.infeasible_queries += 1
        if not ok:
            self.stats.discarded_successors += 1
            self.stats.paths_infeasible += 1
            self._release(state)
            return None
        ctx = state.mode_ctx
        out = commit_assume(state, self.p, cond, self.cfg.unwind_limit)
        out.mode_ctx = ctx
        return out

    def _assert(self, state, ins):
        cond = rename(state, self.p, ins.cond)
        solver, base, root, memo = self._prepare(state, cond)
        self.stats.assertion_queries += 1
        violated = self._solve(solver, base + [-root]) == SAT
        self._log("assert", state, False, violated)
        ctx = state.mode_ctx
        if violated:
            w = self._witness(state, ins, solver, memo)
            self.verdict.violations.append(w)
            if self.cfg.stop_at_first_violation:
                raise _Violation(w)
            holds = self._solve(solver, base + [root]) == SAT
            self._log("assert", state, True, holds)
            if not holds:
                self._release(state)
                return None
        out = commit_assert(state, self.p, cond, self.cfg.unwind_limit)
        out.mode_ctx = ctx
        return out

    def _witness(self, state, ins, solver, memo):
        inputs = []
        line_of = {}
        for ev_step, ev in enumerate(state.path_trace):
            if ev.kind == "nondet":
                line_of[ev.detail] = (ev_step, self.p.functions[ev.function].body[ev.instr_index].line)
        for k, name in enumerate(state.nondet_inputs):
            bits = memo.get(name)
            if isinstance(bits, int):
                value = "1" if solver.value(bits) else "0"
            else:
                value = str(decode_word(bits, solver.value))
            step_no, line = line_of[name]
            inputs.append({"ordinal": k, "variable": name.base, "value": value,
                           "step": step_no, "line": line})
        trace = []
        for ev_step, ev in enumerate(state.path_trace):
            if ev.kind == "branch":
                line = self.p.functions[ev.function].body[ev.instr_index].line
                trace.append({"function": ev.function, "index": ev.instr_index,
                              "direction": ev.direction, "line": line, "step": ev_step})
        cfg = {k: v for k, v in dataclasses.asdict(self.cfg).items()
               if k in ("strategy", "mode", "unwind_limit", "int_width", "fi_strict_assumptions")}
        return Witness((state.func, state.pc, ins.line), inputs, trace, self.W,
                       tool_version=__version__, config=cfg)

    # -- driver --

    def _end_path(self, state):
        self.stats.paths_completed += 1
        if self.cfg.record_paths:
            self.verdict.complete_paths.append(branch_string(state.path_trace))
            self.verdict.final_states.append(state)
        self._release(state)

    def _run_path(self, state):
        p, cfg = self.p, self.cfg
        while True:
            self._check_budget()
            if state.truncated:
                self.stats.paths_truncated += 1
                self.verdict.bounded = True
                self._release(state)
                return
            if is_final(state, p):
                self._end_path(state)
                return
            ins = state.instruction(p)
            if isinstance(ins, g.Branch):
                children = self._branch(state, ins)
                if not children:
                    return
                if len(children) == 1:
                    state = children[0]
                    continue
                if cfg.strategy == DFS:
                    self.worklist.append(children[1])
                    self._frontier()
                    state = children[0]
                    continue
                self.worklist.extend(children)
                self._frontier()
                return
            if isinstance(ins, g.Assume):
                state = self._assume(state, ins)
            elif isinstance(ins, g.Assert):
                state = self._assert(state, ins)
            else:
                ctx = state.mode_ctx
                try:
                    state = step(state, p, cfg.unwind_limit, cfg.max_call_depth)
                except CallDepthExceeded as exc:
                    raise ResourceLimit(str(exc)) from None
                state.mode_ctx = ctx
            if state is None:
                return

    def run(self) -> Verdict:
        s0 = initial_state(self.p)
        if not self.pi:
            s0.mode_ctx = FiContext(LayeredMemo())
        self.stats.states_explored = 1
        self.worklist.append(s0)
        try:
            while self.worklist:
                state = self.worklist.pop() if self.cfg.strategy == DFS else self.worklist.popleft()
                if self.pi and state.mode_ctx is None:
                    state.mode_ctx = self.pi_backtrack(state)
                self._run_path(state)
        except _Violation as v:
            self.verdict.outcome = UNSAFE
            self.verdict.witness = v.witness
            self.verdict.bounded = False
        except ResourceLimit as exc:
            self.verdict.outcome = RESOURCE_LIMIT
            self.verdict.reason = str(exc)
            self.verdict.bounded = False
        else:
            if self.verdict.violations:
                self.verdict.outcome = UNSAFE
                self.verdict.witness = self.verdict.violations[0]
                self.verdict.bounded = False
        return self.verdict


def explore(p: g.GotoProgram, cfg: Optional[ExplorerConfig] = None) -> Verdict:
    cfg = cfg or ExplorerConfig()
    ex = _Explorer(p, cfg)
    verdict = ex.run()
    verdict.solver = ex.last_solver
    return verdict


def collect_stats(verdict: Verdict) -> dict:
    return dataclasses.asdict(verdict.stats)
