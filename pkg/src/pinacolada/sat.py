"""Incremental CDCL SAT solver with assumption-based solving.

Literals on the public interface are DIMACS integers (``v`` / ``-v``).
Internally literal ``v`` is ``2*v`` and ``-v`` is ``2*v + 1``.

Two watched literals, first-UIP learning with local minimisation,
non-chronological backjumping, exponential VSIDS, Luby restarts, phase
saving. Assumptions are the first decisions, so an UNSAT answer under
assumptions yields a failed-assumption subset from the final conflict.
"""
from __future__ import annotations

import heapq
import random
from dataclasses import dataclass

SAT = "SAT"
UNSAT = "UNSAT"

RESTART_BASE = 100
REDUCE_INTERVAL = 2000


class QueriedWrongPhase(Exception):
    pass


class _Clause:
    __slots__ = ("lits", "learnt", "activity", "deleted")

    def __init__(self, lits, learnt=False):
        self.lits = lits
        self.learnt = learnt
        self.activity = 0.0
        self.deleted = False


@dataclass
class SolverStats:
    solve_calls: int = 0
    conflicts: int = 0
    propagations: int = 0
    decisions: int = 0
    restarts: int = 0


def luby(i: int) -> int:
    """i-th element (0-based) of the Luby sequence 1 1 2 1 1 2 4 ..."""
    size, seq = 1, 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) >> 1
        seq -= 1
        i = i % size
    return 1 << seq


def _to_internal(lit: int) -> int:
    return 2 * lit if lit > 0 else -2 * lit + 1


def _to_dimacs(ilit: int) -> int:
    return -(ilit >> 1) if ilit & 1 else ilit >> 1


class Solver:
    def __init__(self, seed=None):
        self.nvars = 0
        self.vals = [0, 0]
        self.level = [0]
        self.reason = [None]
        self.activity = [0.0]
        self.phase = [False]
        self.seen = [False]
        self.watches = [[], []]
        self.clauses = []
        self.learnts = []
        self.original = []
        self.trail = []
        self.trail_lim = []
        self.qhead = 0
        self.ok = True
        self.var_inc = 1.0
        self.var_decay = 0.95
        self.cla_inc = 1.0
        self.cla_decay = 0.999
        self.heap = []
        self.stats = SolverStats()
        self._rng = random.Random(seed) if seed is not None else None
        self._result = None
        self._model = None
        self._failed = None

    # -- construction --

    def new_var(self) -> int:
        self.nvars += 1
        v = self.nvars
        self.vals += [0, 0]
        self.level.append(0)
        self.reason.append(None)
        act = self._rng.random() * 1e-5 if self._rng is not None else 0.0
        self.activity.append(act)
        self.phase.append(False)
        self.seen.append(False)
        self.watches += [[], []]
        heapq.heappush(self.heap, (-act, v))
        return v

    def new_vars(self, n: int) -> list[int]:
        return [self.new_var() for _ in range(n)]

    def add_clause(self, clause) -> None:
        clause = list(clause)
        for lit in clause:
            if lit == 0 or abs(lit) > self.nvars:
                raise ValueError(f"literal {lit} references an unallocated variable")
        self.original.append(clause)
        self._result = None
        if not self.ok:
            return
        self._cancel_until(0)
        lits = []
        seen = set()
        vals = self.vals
        for d in clause:
            il = _to_internal(d)
            if il ^ 1 in seen:
                return  # tautology
            if il in seen:
                continue
            seen.add(il)
            if vals[il] == 1:
                return  # satisfied at level 0
            if vals[il] == -1:
                continue
            lits.append(il)
        if not lits:
            self.ok = False
            return
        if len(lits) == 1:
            self._enqueue(lits[0], None)
            if self._propagate() is not None:
                self.ok = False
            return
        c = _Clause(lits)
        self._attach(c)
        self.clauses.append(c)

    @property
    def num_clauses(self) -> int:
        return len(self.original)

    # -- internals --

    def _attach(self, c):
        self.watches[c.lits[0]].append(c)
        self.watches[c.lits[1]].append(c)

    def _enqueue(self, lit, reason):
        v = lit >> 1
        self.vals[lit] = 1
        self.vals[lit ^ 1] = -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _decision_level(self):
        return len(self.trail_lim)

    def _cancel_until(self, lvl):
        if len(self.trail_lim) <= lvl:
            return
        vals, phase, reason, act, heap = self.vals, self.phase, self.reason, self.activity, self.heap
        stop = self.trail_lim[lvl]
        trail = self.trail
        for k in range(len(trail) - 1, stop - 1, -1):
            lit = trail[k]
            v = lit >> 1
            vals[lit] = 0
            vals[lit ^ 1] = 0
            phase[v] = not (lit & 1)
            reason[v] = None
            heapq.heappush(heap, (-act[v], v))
        del trail[stop:]
        del self.trail_lim[lvl:]
        self.qhead = min(self.qhead, stop)

    def _propagate(self):
        vals = self.vals
        watches = self.watches
        trail = self.trail
        confl = None
        props = 0
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            props += 1
            false_lit = p ^ 1
            ws = watches[false_lit]
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c.deleted:
                    continue
                lits = c.lits
                if lits[0] == false_lit:
                    lits[0] = lits[1]
                    lits[1] = false_lit
                first = lits[0]
                if vals[first] == 1:
                    ws[j] = c
                    j += 1
                    continue
                found = False
                for k in range(2, len(lits)):
                    lk = lits[k]
                    if vals[lk] != -1:
                        lits[1] = lk
                        lits[k] = false_lit
                        watches[lk].append(c)
                        found = True
                        break
                if found:
                    continue
                ws[j] = c
                j += 1
                if vals[first] == -1:
                    confl = c
                    while i < n:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    self.qhead = len(trail)
                else:
                    self._enqueue(first, c)
            del ws[j:]
            if confl is not None:
                break
        self.stats.propagations += props
        return confl

    def _bump_var(self, v):
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for u in range(1, self.nvars + 1):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100
            self._rebuild_heap()
        elif self.vals[2 * v] == 0:
            heapq.heappush(self.heap, (-self.activity[v], v))

    def _bump_clause(self, c):
        c.activity += self.cla_inc
        if c.activity > 1e20:
            for lc in self.learnts:
                lc.activity *= 1e-20
            self.cla_inc *= 1e-20

    def _rebuild_heap(self):
        self.heap = [(-self.activity[v], v) for v in range(1, self.nvars + 1)
                     if self.vals[2 * v] == 0]
        heapq.heapify(self.heap)

    def _pick_branch(self):
        heap, act, vals = self.heap, self.activity, self.vals
        if len(heap) > 4 * self.nvars + 64:
            self._rebuild_heap()
            heap = self.heap
        while heap:
            neg, v = heapq.heappop(heap)
            if vals[2 * v] == 0 and -neg == act[v]:
                return 2 * v if self.phase[v] else 2 * v + 1
        return None

    def _analyze(self, confl):
        seen, level, reason, trail = self.seen, self.level, self.reason, self.trail
        dl = len(self.trail_lim)
        learnt = [0]
        path = 0
        p = None
        index = len(trail) - 1
        while True:
            if confl.learnt:
                self._bump_clause(confl)
            lits = confl.lits
            for q in (lits if p is None else lits[1:]):
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    self._bump_var(v)
                    seen[v] = True
                    if level[v] >= dl:
                        path += 1
                    else:
                        learnt.append(q)
            while not seen[trail[index] >> 1]:
                index -= 1
            p = trail[index]
            index -= 1
            confl = reason[p >> 1]
            seen[p >> 1] = False
            path -= 1
            if path == 0:
                break
        learnt[0] = p ^ 1
        # local minimisation: drop literals implied by other learnt literals
        kept = [learnt[0]]
        for q in learnt[1:]:
            r = reason[q >> 1]
            if r is None:
                kept.append(q)
                continue
            for x in r.lits[1:]:
                xv = x >> 1
                if not seen[xv] and level[xv] > 0:
                    kept.append(q)
                    break
        for q in learnt[1:]:
            seen[q >> 1] = False
        learnt = kept
        if len(learnt) == 1:
            bt = 0
        else:
            mi = 1
            for k in range(2, len(learnt)):
                if level[learnt[k] >> 1] > level[learnt[mi] >> 1]:
                    mi = k
            learnt[1], learnt[mi] = learnt[mi], learnt[1]
            bt = level[learnt[1] >> 1]
        return learnt, bt

    def _analyze_final(self, failed):
        """Assumption literals responsible for ``failed`` being false."""
        out = [failed]
        v0 = failed >> 1
        if self.level[v0] == 0:
            return out
        seen, reason, level = self.seen, self.reason, self.level
        seen[v0] = True
        for k in range(len(self.trail) - 1, self.trail_lim[0] - 1, -1):
            lit = self.trail[k]
            v = lit >> 1
            if not seen[v]:
                continue
            r = reason[v]
            if r is None:
                # every decision at these levels is an assumption
                out.append(lit)
            else:
                for q in r.lits[1:]:
                    if level[q >> 1] > 0:
                        seen[q >> 1] = True
            seen[v] = False
        seen[v0] = False
        return out

    def _reduce_db(self):
        self.learnts.sort(key=lambda c: c.activity)
        half = len(self.learnts) // 2
        keep = []
        for k, c in enumerate(self.learnts):
            locked = self.reason[c.lits[0] >> 1] is c and self.vals[c.lits[0]] == 1
            if k < half and len(c.lits) > 2 and not locked:
                c.deleted = True
            else:
                keep.append(c)
        self.learnts = keep

    def _search(self, budget, assumptions):
        conflicts = 0
        stats = self.stats
        while True:
            confl = self._propagate()
            if confl is not None:
                stats.conflicts += 1
                conflicts += 1
                if not self.trail_lim:
                    self.ok = False
                    return UNSAT
                learnt, bt = self._analyze(confl)
                self._cancel_until(bt)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    c = _Clause(learnt, learnt=True)
                    self._attach(c)
                    self.learnts.append(c)
                    self._bump_clause(c)
                    self._enqueue(learnt[0], c)
                self.var_inc /= self.var_decay
                self.cla_inc /= self.cla_decay
                if stats.conflicts % REDUCE_INTERVAL == 0:
                    self._reduce_db()
                continue
            if conflicts >= budget:
                self._cancel_until(0)
                return None
            nxt = None
            while len(self.trail_lim) < len(assumptions):
                a = assumptions[len(self.trail_lim)]
                val = self.vals[a]
                if val == 1:
                    self.trail_lim.append(len(self.trail))
                elif val == -1:
                    self._failed = [_to_dimacs(x) for x in self._analyze_final(a)]
                    return UNSAT
                else:
                    nxt = a
                    break
            if nxt is None:
                nxt = self._pick_branch()
                if nxt is None:
                    return SAT
                stats.decisions += 1
            self.trail_lim.append(len(self.trail))
            self._enqueue(nxt, None)

    # -- public API --

    def solve(self, assumptions=()) -> str:
        self.stats.solve_calls += 1
        self._model = None
        self._failed = None
        internal = []
        for a in assumptions:
            if a == 0 or abs(a) > self.nvars:
                raise ValueError(f"assumption {a} references an unallocated variable")
            internal.append(_to_internal(a))
        if not self.ok:
            self._failed = []
            self._result = UNSAT
            return UNSAT
        self._cancel_until(0)
        status = None
        k = 0
        while status is None:
            status = self._search(luby(k) * RESTART_BASE, internal)
            if status is None:
                self.stats.restarts += 1
            k += 1
        if status == SAT:
            vals = self.vals
            self._model = [False] + [vals[2 * v] == 1 for v in range(1, self.nvars + 1)]
        elif self._failed is None:
            self._failed = []
        self._cancel_until(0)
        self._result = status
        return status

    def model(self, var: int) -> bool:
        if self._result != SAT:
            raise QueriedWrongPhase("model() is only defined after a SAT answer")
        if var < 1 or var >= len(self._model):
            raise ValueError(f"variable {var} was allocated after the last solve")
        return self._model[var]

    def value(self, lit: int) -> bool:
        return self.model(abs(lit)) == (lit > 0)

    def failed_assumptions(self) -> list[int]:
        if self._result != UNSAT:
            raise QueriedWrongPhase("failed_assumptions() is only defined after UNSAT")
        return list(self._failed)

    def dimacs(self) -> str:
        return format_dimacs(self.nvars, self.original)


def new_solver(seed=None) -> Solver:
    return Solver(seed)


def format_dimacs(nvars: int, clauses) -> str:
    lines = [f"p cnf {nvars} {len(clauses)}"]
    for c in clauses:
        lines.append(" ".join(str(x) for x in c) + " 0")
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> tuple[int, list[list[int]]]:
    nvars = None
    clauses = []
    current = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line[0] in "c%":
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad problem line: {line!r}")
            nvars = int(parts[2])
            continue
        for tok in line.split():
            x = int(tok)
            if x == 0:
                clauses.append(current)
                current = []
            else:
                current.append(x)
    if current:
        clauses.append(current)
    if nvars is None:
        nvars = max((abs(x) for c in clauses for x in c), default=0)
    return nvars, clauses


def solve_dimacs(text: str):
    """Solve a DIMACS problem; returns (result, model as list of signed ints)."""
    nvars, clauses = parse_dimacs(text)
    s = Solver()
    s.new_vars(nvars)
    for c in clauses:
        s.add_clause(c)
    res = s.solve()
    if res == SAT:
        return res, [v if s.model(v) else -v for v in range(1, nvars + 1)]
    return res, None
