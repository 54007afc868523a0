import itertools

import pytest

from pinacolada import goto as g
from pinacolada import syntax as syn
from pinacolada.frontend import parse_source
from pinacolada.oracle import run_ast, run_concrete, InputExhausted

from conftest_paths import corpus_params
from helpers import COUNTER_LOOP, compile_src
from progfuzz import corpus as fuzz_corpus


def body(src, fn="main"):
    return compile_src(src).functions[fn].body


def test_assert_false_lowering():
    b = body("int main(){assert(false);}")
    assert [g.opcode(i) for i in b] == ["ASSERT", "RETURN"]
    assert b[0].cond == syn.BoolLit(False)
    assert b[1].synthetic


def test_counter_loop_lowering():
    f = compile_src(COUNTER_LOOP).functions["main"]
    ops = [g.opcode(i) for i in f.body]
    assert ops == ["ASSIGN", "ASSIGN", "BRANCH", "BRANCH", "ASSIGN", "GOTO", "GOTO", "ASSERT", "RETURN"]
    head = f.body[2]
    assert syn.format_expr(head.cond) == "(x < 3)"
    assert f.loop_heads == {2}
    assert (head.target_true, head.target_false) == (3, 7)
    assert syn.format_expr(f.body[3].cond) == "(y < 0)"
    assert f.body[6].target == 2  # back-edge
    assert g.reachable_check(compile_src(COUNTER_LOOP)) == []


def test_if_else_arms_join():
    src = "int main(){int a; bool c = nondet_bool(); if (c) {a=1;} else {a=2;} return a;}"
    b = body(src)
    br = b[1]
    assert isinstance(br, g.Branch)
    then_end = b[br.target_false - 1]
    else_end = b[br.target_false + 1]
    assert isinstance(then_end, g.Goto) and isinstance(else_end, g.Goto)
    assert then_end.target == else_end.target
    # both concrete paths reach the join with the expected value
    p = compile_src(src)
    assert run_concrete(p, [1], 4).return_value == 1
    assert run_concrete(p, [0], 4).return_value == 2


def test_short_circuit_becomes_branches():
    b = body("int main(){ int x = nondet_int(); if (x > 0 && x < 3) { x = 0; } return x; }")
    branches = [i for i in b if isinstance(i, g.Branch)]
    assert len(branches) == 2
    assert not any(isinstance(i, g.Assign) and "&&" in syn.format_expr(i.expr) for i in b)


def test_nondet_becomes_instruction():
    b = body("int main(){ int x = nondet_int() + nondet_int(); return x; }")
    nd = [i for i in b if isinstance(i, g.Nondet)]
    assert len(nd) == 2 and len({i.var for i in nd}) == 2


def test_calls_stay_symbolic():
    p = compile_src("int f(int a){ return a + 1; } int main(){ int y = f(2); return y; }")
    calls = [i for i in p.functions["main"].body if isinstance(i, g.Call)]
    assert len(calls) == 1 and calls[0].callee == "f" and len(calls[0].args) == 1


def test_reachable_check_after_return():
    p = compile_src("int main(){ return 0; }")
    f = p.functions["main"]
    f.body.append(g.Assign("x", syn.IntLit(1), line=9))
    w = g.reachable_check(p)
    assert [(x.function, x.index) for x in w] == [("main", 1)]


def test_reachable_check_infinite_loop():
    w = g.reachable_check(compile_src("int main(){ while(true){} assert(false); return 0; }"))
    assert [g.opcode(compile_src("int main(){ while(true){} assert(false); return 0; }")
                     .functions["main"].body[x.index]) for x in w] == ["ASSERT", "RETURN"]


def test_dump_format():
    text = g.dump(compile_src(COUNTER_LOOP))
    lines = text.splitlines()
    assert lines[0] == "int main():"
    assert lines[3] == "2: BRANCH (x < 3) ? 3 : 7  # loop head"
    for ln in lines[1:]:
        idx, rest = ln.split(": ", 1)
        assert idx.isdigit() and rest.split()[0].isupper()


def _check_structure(p):
    for f in p.functions.values():
        n = len(f.body)
        back_targets = set()
        for i, ins in enumerate(f.body):
            for t in (getattr(ins, "target", None), getattr(ins, "target_true", None),
                      getattr(ins, "target_false", None)):
                if t is not None:
                    assert 0 <= t < n
                    if t <= i:
                        back_targets.add(t)
            if isinstance(ins, (g.Branch, g.Assert, g.Assume)):
                assert ins.cond.ty == "bool"
            if isinstance(ins, g.Call):
                assert len(p.functions[ins.callee].params) == len(ins.args)
        assert f.loop_heads == back_targets
        assert isinstance(f.body[-1], (g.Return, g.Halt))


@pytest.mark.parametrize("name,src", corpus_params())
def test_structure_corpus(name, src):
    _check_structure(compile_src(src))


def test_structure_fuzz():
    for _, src in fuzz_corpus(200):
        _check_structure(compile_src(src))


def test_lowering_deterministic():
    for _, src in fuzz_corpus(20):
        assert g.dump(compile_src(src)) == g.dump(compile_src(src))


def _all_inputs(p, width, max_inputs=3):
    """Every input tuple that some run needs, via the same odometer as the oracle."""
    base = 1 << width
    for k in range(max_inputs + 1):
        for digits in itertools.product(range(base), repeat=k):
            try:
                res = run_concrete(p, list(digits), width, 20_000)
            except InputExhausted:
                continue
            if res.inputs_used == k:
                yield list(digits)


def _agree(src, width=4):
    ast = parse_source(src)
    p = g.lower(ast)
    count = 0
    for inputs in _all_inputs(p, width):
        a = run_ast(ast, inputs, width, 20_000)
        c = run_concrete(p, inputs, width, 20_000)
        if "step-limit" in (a.outcome, c.outcome):
            continue
        assert a.outcome == c.outcome, inputs
        if c.outcome == "exit":
            user_vars = {k: v for k, v in c.env.items() if not k.startswith("$")}
            assert a.env == user_vars, inputs
            assert a.return_value == c.return_value
        count += 1
    return count


@pytest.mark.parametrize("name,src", corpus_params())
def test_ast_and_goto_semantics_agree_corpus(name, src):
    assert _agree(src) > 0


def test_ast_and_goto_semantics_agree_fuzz():
    for _, src in fuzz_corpus(60):
        assert _agree(src) > 0
