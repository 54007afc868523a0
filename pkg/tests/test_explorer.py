from collections import Counter

import pytest

from pinacolada.explorer import (
    BFS, BFS_PI_WARNING, DFS, FULL_INCREMENTAL, PARTIAL_INCREMENTAL, RESOURCE_LIMIT, SAFE,
    UNSAFE, ExplorerConfig, collect_stats, explore,
)
from pinacolada.oracle import replay_witness

from conftest_paths import corpus_params, program
from helpers import COUNTER_LOOP, COUNTER_LOOP_STUCK, TWO_DIAMONDS, X_NE_5, compile_src, run

ALL_MODES = [
    dict(mode=FULL_INCREMENTAL),
    dict(mode=FULL_INCREMENTAL, fi_strict_assumptions=True),
    dict(mode=PARTIAL_INCREMENTAL),
]


def test_defaults():
    cfg = ExplorerConfig()
    assert (cfg.strategy, cfg.mode, cfg.unwind_limit, cfg.stop_at_first_violation) == (
        DFS, FULL_INCREMENTAL, None, True)
    with pytest.raises(ValueError):
        ExplorerConfig(unwind_limit=0)


@pytest.mark.parametrize("kw", ALL_MODES)
def test_assert_false(kw):
    v = run("int main(){ assert(false); return 0; }", **kw)
    assert v.outcome == UNSAFE
    assert v.witness.nondet_inputs == []
    assert v.stats.solver_queries == 1


def test_straight_line_one_query():
    v = run("int main(){ int x = nondet_int(); x = x * 2; assert(x != 3); return 0; }")
    assert v.outcome == SAFE and v.stats.solver_queries == 1


@pytest.mark.parametrize("strategy", [DFS, BFS])
@pytest.mark.parametrize("kw", ALL_MODES)
def test_x_ne_5_witness(strategy, kw):
    p = compile_src(X_NE_5)
    v = explore(p, ExplorerConfig(strategy=strategy, int_width=4, **kw))
    assert v.outcome == UNSAFE and not v.bounded
    assert [(i["variable"], i["value"]) for i in v.witness.nondet_inputs] == [("x", "5")]
    assert replay_witness(p, v.witness)


@pytest.mark.parametrize("kw", ALL_MODES)
def test_counter_loop_walkthrough(kw):
    v = run(COUNTER_LOOP, record_queries=True, record_paths=True, int_width=32, **kw)
    assert v.outcome == SAFE and not v.bounded
    heads = [q for q in v.query_log if q["index"] == 2 and q["polarity"]]
    assert [q["result"] for q in heads] == [True, True, False]  # third x<3 check is UNSAT
    assert v.stats.solver_queries == 11
    assert v.stats.folded_decisions == 0
    (final,) = v.final_states
    assert final.loop_counters == {(2, 0, 1): 2}  # exactly two unrollings


def test_stuck_loop_bounded():
    v = run(COUNTER_LOOP_STUCK, unwind_limit=10)
    assert v.outcome == SAFE and v.bounded
    assert v.stats.paths_truncated == 1


def test_stuck_loop_budgets():
    assert run(COUNTER_LOOP_STUCK, max_states=200).outcome == RESOURCE_LIMIT
    v = run(COUNTER_LOOP_STUCK, timeout_sec=0.3)
    assert v.outcome == RESOURCE_LIMIT and not v.bounded and v.witness is None


def test_call_depth_budget():
    v = run("void f() { f(); } int main() { f(); return 0; }", max_call_depth=64)
    assert v.outcome == RESOURCE_LIMIT


def test_constant_branch_is_folded():
    v = run("int main(){ int x = nondet_int(); if (1 == 1) { x = 0; } return x; }")
    assert v.stats.solver_queries == 0
    assert v.stats.folded_decisions == 1
    assert v.stats.discarded_successors == 1 == v.stats.folded_infeasible


def test_committed_assume_decides_branch():
    src = "int main(){ int y = nondet_int(); assume(y < 0); if (y >= 0) { y = 1; } return y; }"
    v = run(src, record_queries=True)
    branch = [q for q in v.query_log if q["kind"] == "branch"]
    assert [(q["polarity"], q["result"]) for q in branch] == [(True, False), (False, True)]


def test_no_branch_program_one_pi_solver():
    v = run("int main(){ int x = 1; return x; }", mode=PARTIAL_INCREMENTAL)
    assert v.stats.solver_instances_created == 1


# hand trace of the two-diamond program (4 feasible paths, no asserts):
# 3 branch visits x 2 queries; states = root + 2 + 4; DFS keeps at most one
# pending sibling per diamond, BFS holds all 4 leaves at once.
DIAMOND_EXPECT = {
    (DFS, PARTIAL_INCREMENTAL): dict(solver_queries=6, solver_instances_created=4, max_live_solvers=1,
                                     states_explored=7, max_frontier_size=2),
    (BFS, PARTIAL_INCREMENTAL): dict(solver_queries=6, solver_instances_created=4, max_live_solvers=4,
                                     states_explored=7, max_frontier_size=4),
    (DFS, FULL_INCREMENTAL): dict(solver_queries=6, solver_instances_created=1, max_live_solvers=1,
                                  states_explored=7, max_frontier_size=2, activation_vars=3),
    (BFS, FULL_INCREMENTAL): dict(solver_queries=6, solver_instances_created=1, max_live_solvers=1,
                                  states_explored=7, max_frontier_size=4, activation_vars=3),
}


@pytest.mark.parametrize("key", list(DIAMOND_EXPECT))
def test_two_diamond_accounting(key):
    strategy, mode = key
    v = run(TWO_DIAMONDS, strategy=strategy, mode=mode)
    stats = collect_stats(v)
    for field, want in DIAMOND_EXPECT[key].items():
        assert stats[field] == want, field
    assert v.stats.paths_completed == 4
    assert (BFS_PI_WARNING in v.warnings) == (key == (BFS, PARTIAL_INCREMENTAL))


def test_first_violation_stops_before_diverging_sibling():
    v = run(program("first_violation_diverging_sibling.mc"), record_queries=True)
    assert v.outcome == UNSAFE
    last = v.query_log[-1]
    assert (last["kind"], last["result"]) == ("assert", True)
    assert len(v.query_log) == v.stats.solver_queries == 3
    assert v.stats.states_explored == 3


def test_collect_all_violations():
    src = """int main() {
      int x = nondet_int();
      if (x > 0) { assert(x != 3); } else { assert(x != -3); }
      return 0;
    }"""
    p = compile_src(src)
    v = explore(p, ExplorerConfig(int_width=4, stop_at_first_violation=False))
    assert v.outcome == UNSAFE
    assert len(v.violations) == 2
    assert all(replay_witness(p, w) for w in v.violations)


def test_fi_disabling_unit_vs_assumption():
    # strict mode keeps abandoned activation literals as assumptions
    unit = run(TWO_DIAMONDS)
    strict = run(TWO_DIAMONDS, fi_strict_assumptions=True)
    assert unit.outcome == strict.outcome == SAFE
    assert unit.solver.num_clauses > strict.solver.num_clauses or unit.stats.clauses_added > strict.stats.clauses_added


@pytest.mark.parametrize("name,src", corpus_params())
def test_eager_check_accounting(name, src):
    for kw in ALL_MODES:
        v = run(src, debug_recheck=True, **kw)
        s = v.stats
        assert s.discarded_successors == s.infeasible_queries + s.folded_infeasible
        if v.outcome == SAFE:
            assert v.bounded == (s.paths_truncated > 0)
        assert (v.witness is not None) == (v.outcome == UNSAFE)


def _complete_paths(src, strategy):
    v = run(src, strategy=strategy, record_paths=True)
    return v.outcome, Counter(v.complete_paths)


@pytest.mark.parametrize("name,src", corpus_params())
def test_dfs_bfs_same_paths(name, src):
    o1, paths1 = _complete_paths(src, DFS)
    o2, paths2 = _complete_paths(src, BFS)
    assert o1 == o2
    if o1 == SAFE:
        assert paths1 == paths2
