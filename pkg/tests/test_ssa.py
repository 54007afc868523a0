import pytest

from pinacolada import goto as g
from pinacolada import syntax as syn
from pinacolada.arith import binary_op, unary_op, wrap
from pinacolada.bitblast import SsaName
from pinacolada.explorer import ExplorerConfig, explore
from pinacolada.oracle import run_concrete
from pinacolada.ssa import (
    CallDepthExceeded, PList, commit_assert, commit_assume, current_name, enter_call, fork,
    initial_state, is_final, replay, step,
)

from conftest_paths import corpus_params
from helpers import COUNTER_LOOP, compile_src
from progfuzz import corpus as fuzz_corpus


def defs_text(s):
    return [f"{name} := {syn.format_expr(e)}" for name, e in s.defs]


def test_initial_state_counter_loop():
    p = compile_src(COUNTER_LOOP)
    s = initial_state(p)
    assert (s.pc, s.func, s.version_map, len(s.defs), len(s.path_trace), s.truncated) == (0, "main", {}, 0, 0, False)


def test_initial_state_empty_main():
    p = compile_src("void main() { }")
    assert is_final(initial_state(p), p)


def test_initial_global_version_zero():
    p = compile_src("int g; int main() { return g; }")
    assert current_name(initial_state(p), p, "g") == SsaName("g", 0, 0)


def test_assign_versions():
    p = compile_src("int main() { int x = 1; x = x + 1; x = x; return x; }")
    s = initial_state(p)
    for _ in range(3):
        s = step(s, p)
    assert defs_text(s) == ["x@0#1 := 1", "x@0#2 := (x@0#1 + 1)", "x@0#3 := x@0#2"]


def test_fork_on_literal_creates_both():
    p = compile_src("int main() { int x = 0; if (true) { x = 1; } return x; }")
    s = step(initial_state(p), p)
    t, f = fork(s, p, s.instruction(p))
    assert (t.path_trace.since(0)[-1].direction, f.path_trace.since(0)[-1].direction) == (True, False)
    assert t.pc != f.pc
    assert t.defs is f.defs  # shared prefix


def drive(p, inputs, width, decide=None, unwind=None, max_call_depth=4096):
    """Walk one path, choosing branch directions by evaluating the SSA defs concretely."""
    s = initial_state(p)
    env = {}
    inputs = list(inputs)

    def ev(e):
        if isinstance(e, syn.IntLit):
            return wrap(e.value, width)
        if isinstance(e, syn.BoolLit):
            return e.value
        if isinstance(e, syn.Var):
            if e.name.version == 0:
                return False if e.ty == "bool" else 0
            return env[e.name]
        if isinstance(e, syn.Unary):
            return unary_op(e.op, ev(e.operand), width)
        return binary_op(e.op, ev(e.left), ev(e.right), width)

    done = 0
    while not is_final(s, p) and not s.truncated:
        ins = s.instruction(p)
        if isinstance(ins, g.Branch):
            t, f = fork(s, p, ins, unwind)
            cond = t.conds.since(len(t.conds) - 1)[0][0]
            s = t if ev(cond) else f
        elif isinstance(ins, g.Assume):
            s = commit_assume(s, p, unwind=unwind)
        elif isinstance(ins, g.Assert):
            s = commit_assert(s, p, unwind=unwind)
        else:
            s = step(s, p, unwind, max_call_depth)
        for name, e in s.defs.since(done):
            if isinstance(e, syn.Nondet):
                raw = inputs.pop(0)
                env[name] = bool(raw & 1) if e.kind == "bool" else wrap(raw, width)
            else:
                env[name] = ev(e)
        done = len(s.defs)
    return s, env, ev


def final_values(p, s, env):
    out = {}
    for (base, frame), version in s.version_map.items():
        if frame == 0:
            out[base] = env[SsaName(base, 0, version)]
    return out


def test_counter_loop_loop_counter_reaches_2():
    p = compile_src(COUNTER_LOOP)
    s, env, _ = drive(p, [], 4)
    directions = [e.direction for e in s.path_trace if e.kind == "branch"]
    assert directions == [True, True, True, True, False]
    assert s.loop_counters == {(2, 0, 1): 2}
    assert final_values(p, s, env)["x"] == 3


def test_loop_reentry_restarts_count():
    src = """int main() {
      int i = 0;
      while (i < 2) {
        int j = 0;
        while (j < 3) { j = j + 1; }
        i = i + 1;
      }
      return 0;
    }"""
    p = compile_src(src)
    s, _, _ = drive(p, [], 4)
    inner = {k: v for k, v in s.loop_counters.items() if k[0] != min(p.functions["main"].loop_heads)}
    assert sorted(inner.values()) == [3, 3]
    assert len(inner) == 2  # one key per entry ordinal


def test_unwind_truncates():
    p = compile_src(COUNTER_LOOP)
    s, _, _ = drive(p, [], 4, unwind=1)
    assert s.truncated


def test_call_defs():
    p = compile_src("int id(int a) { return a; } int main() { int y = id(3); return y; }")
    s, env, _ = drive(p, [], 4)
    text = defs_text(s)
    assert "a@1#1 := 3" in text
    assert "y@0#1 := a@1#1" in text


def test_recursive_frames_are_isolated():
    src = """int fact(int n) {
      if (n <= 1) { return 1; }
      int r = fact(n - 1);
      n = n - 1;
      return (n + 1) * r;
    }
    int main() { int v = fact(3); return v; }"""
    p = compile_src(src)
    s, env, _ = drive(p, [], 8)
    assert final_values(p, s, env)["v"] == 6
    assert run_concrete(p, [], 8).return_value == 6
    # each recursive frame has its own n, each assigned once by the call and once by n = n - 1
    frames = {name.frame for name, _ in s.defs if name.base == "n"}
    assert len(frames) == 3
    assert SsaName("n", 1, 2) in env and SsaName("n", 2, 2) in env


def test_call_depth_exceeded():
    p = compile_src("void f() { f(); } int main() { f(); return 0; }")
    with pytest.raises(CallDepthExceeded):
        drive(p, [], 4, max_call_depth=64)


def _ssa_sound(s):
    defined = set()
    nondets = set(s.nondet_inputs)
    def names(e):
        if isinstance(e, syn.Var):
            yield e.name
        for f in ("operand", "left", "right"):
            if hasattr(e, f):
                yield from names(getattr(e, f))
    for name, e in s.defs:
        assert name not in defined
        for n in names(e):
            assert n.version == 0 or n in defined
        if isinstance(e, syn.Nondet):
            assert name in nondets
        defined.add(name)
    for cond, _ in s.conds:
        for n in names(cond):
            assert n.version == 0 or n in defined


def _frame_isolation(s, p):
    # only return-value bindings may read a deeper frame: they copy the
    # callee's result into the caller's destination variable
    dests = {ins.dest for f in p.functions.values() for ins in f.body
             if isinstance(ins, g.Call) and ins.dest is not None}
    for name, e in s.defs:
        refs = []
        stack = [e]
        while stack:
            x = stack.pop()
            if isinstance(x, syn.Var):
                refs.append(x.name)
            stack += [getattr(x, f) for f in ("operand", "left", "right") if hasattr(x, f)]
        if any(r.frame > name.frame for r in refs):
            assert name.base in dests, name


def _drive_all_paths(src):
    p = compile_src(src)
    v = explore(p, ExplorerConfig(int_width=4, record_paths=True, stop_at_first_violation=False))
    return p, v.final_states


@pytest.mark.parametrize("name,src", corpus_params())
def test_replay_and_ssa_invariants_corpus(name, src):
    p, finals = _drive_all_paths(src)
    for s in finals:
        again = replay(p, s.path_trace, run_to_end=True)
        assert again == s
        _ssa_sound(s)
        assert all((e.direction is not None) == (e.kind == "branch") for e in s.path_trace)
        _frame_isolation(s, p)


def test_replay_fuzz():
    for _, src in fuzz_corpus(40):
        p, finals = _drive_all_paths(src)
        for s in finals:
            assert replay(p, s.path_trace, run_to_end=True) == s
            _ssa_sound(s)


@pytest.mark.parametrize("name,src", corpus_params())
def test_ssa_matches_concrete_run(name, src):
    # walk the path chosen by the inputs and compare the final frame-0 values
    p = compile_src(src)
    n_inputs = src.count("nondet_")
    for k in range(16):
        inputs = [(k * 7 + 3 * j) % 16 for j in range(8)]
        ref = run_concrete(p, inputs, 4, 10_000)
        if ref.outcome != "exit":
            continue
        s, env, _ = drive(p, inputs, 4)
        got = final_values(p, s, env)
        main_vars = set(p.functions["main"].var_types) | set(p.globals)
        want = {k2: v for k2, v in ref.env.items() if k2 in main_vars}
        assert {k2: v for k2, v in got.items() if k2 in want} == {
            k2: v for k2, v in want.items() if k2 in got}
        if n_inputs == 0:
            break


def test_plist_sharing():
    a = PList().append(1).append(2)
    b, c = a.append(3), a.append(4)
    assert list(b) == [1, 2, 3] and list(c) == [1, 2, 4]
    assert b.since(2) == [3] and len(a) == 2
