"""Command-line entry point.

Exit codes: 0 safe, 10 violation found, 2 resource limit or I/O failure,
1 usage, parse or type errors.
"""
from __future__ import annotations

import argparse
import json
import re
import signal
import sys
import threading
import time

from . import __version__
from . import explorer as ex
from . import goto as g
from .bitblast import UnsupportedWidth
from .frontend import FrontendError, parse_source
from .oracle import EnumerationError, enumerate_verdict, replay_witness
from .sat import SAT, solve_dimacs
from .witness import RunReport, emit_graphml, emit_json

EXIT_SAFE = 0
EXIT_ERROR = 1
EXIT_LIMIT = 2
EXIT_UNSAFE = 10

SUCCESS = "VERIFICATION SUCCESSFUL"
SUCCESS_BOUNDED = "VERIFICATION SUCCESSFUL (BOUNDED)"
FAILED = "VERIFICATION FAILED"
LIMIT = "RESOURCE LIMIT"

REACH_SAFETY = re.compile(
    r"^\s*CHECK\(\s*init\(\s*main\(\s*\)\s*\)\s*,\s*LTL\(\s*G\s*!\s*call\(\s*"
    r"(reach_error|__VERIFIER_error)\(\s*\)\s*\)\s*\)\s*\)\s*$")

STAT_KEYS = ("solver_queries", "solver_instances_created", "states_explored", "max_frontier_size")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


class _Watchdog(Exception):
    pass


def _width(value):
    n = int(value)
    if not 4 <= n <= 64:
        raise argparse.ArgumentTypeError("integer width must be in 4..64")
    return n


def _positive(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _seconds(value):
    t = float(value)
    if t <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return t


def verify_parser():
    ap = _Parser(prog="pinacolada", description="Symbolic execution verifier for MiniC programs.")
    ap.add_argument("file", help="MiniC source file")
    ap.add_argument("--version", action="version", version=f"pinacolada {__version__}")
    ap.add_argument("--bfs", action="store_true", help="breadth-first search (default DFS)")
    ap.add_argument("--partial-incremental", action="store_true",
                    help="one solver per path instead of one global solver")
    ap.add_argument("--fi-strict-assumptions", action="store_true",
                    help="disable abandoned segments by assumption instead of unit clause")
    ap.add_argument("--unwind", type=_positive, metavar="NUM")
    arch = ap.add_mutually_exclusive_group()
    arch.add_argument("--32", dest="arch", action="store_const", const=32)
    arch.add_argument("--64", dest="arch", action="store_const", const=64)
    ap.add_argument("--int-width", type=_width, metavar="N", help="overrides --32/--64")
    ap.add_argument("--propertyfile", metavar="FILE")
    ap.add_argument("--graphml-witness", metavar="FILE")
    ap.add_argument("--json-witness", metavar="FILE")
    ap.add_argument("--dump-goto", action="store_true")
    ap.add_argument("--dump-cnf", metavar="FILE")
    ap.add_argument("--timeout-sec", type=_seconds, metavar="N")
    ap.add_argument("--max-states", type=_positive, metavar="N")
    ap.add_argument("--max-call-depth", type=_positive, metavar="N", default=4096)
    ap.add_argument("--stats", action="store_true")
    return ap


def sat_parser():
    ap = _Parser(prog="pinacolada sat", description="Solve a DIMACS CNF file.")
    ap.add_argument("file")
    return ap


def oracle_parser():
    ap = _Parser(prog="pinacolada oracle",
                 description="Exhaustively enumerate nondet inputs of a MiniC program.")
    ap.add_argument("file")
    ap.add_argument("--int-width", type=_width, default=4)
    ap.add_argument("--max-inputs", type=int, default=3)
    ap.add_argument("--step-limit", type=_positive, default=10**6)
    return ap


def _read_program(path):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return parse_source(data)
    except FrontendError as exc:
        raise UsageError(f"{path}:{exc}") from None


def check_propertyfile(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot read property file {path}: {exc}") from None
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("//")]
    if len(lines) != 1 or not REACH_SAFETY.match(lines[0]):
        raise UsageError(f"{path}: only the reach-safety property is supported")


def run_sat(argv):
    args = sat_parser().parse_args(argv)
    try:
        with open(args.file, encoding="utf-8") as fh:
            text = fh.read()
        res, model = solve_dimacs(text)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if res == SAT:
        print("s SATISFIABLE")
        print("v " + " ".join(str(x) for x in model + [0]))
    else:
        print("s UNSATISFIABLE")
    return EXIT_SAFE


def run_oracle(argv):
    args = oracle_parser().parse_args(argv)
    try:
        ast = _read_program(args.file)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        v = enumerate_verdict(g.lower(ast), args.int_width, args.max_inputs, args.step_limit)
    except EnumerationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(json.dumps(v.to_dict(), sort_keys=True))
    return EXIT_SAFE


def _config(args):
    width = args.int_width or args.arch or 32
    return ex.ExplorerConfig(
        strategy=ex.BFS if args.bfs else ex.DFS,
        mode=ex.PARTIAL_INCREMENTAL if args.partial_incremental else ex.FULL_INCREMENTAL,
        unwind_limit=args.unwind,
        max_call_depth=args.max_call_depth,
        int_width=width,
        fi_strict_assumptions=args.fi_strict_assumptions,
        max_states=args.max_states,
        timeout_sec=args.timeout_sec,
    )


def _explore_with_watchdog(p, cfg):
    """Run the explorer; a SIGALRM backstop covers long single solver calls."""
    use_alarm = (cfg.timeout_sec is not None and hasattr(signal, "setitimer")
                 and threading.current_thread() is threading.main_thread())
    if not use_alarm:
        return ex.explore(p, cfg)

    def fire(signum, frame):
        raise _Watchdog()

    old = signal.signal(signal.SIGALRM, fire)
    signal.setitimer(signal.ITIMER_REAL, cfg.timeout_sec + 0.5)
    try:
        return ex.explore(p, cfg)
    except _Watchdog:
        v = ex.Verdict(ex.RESOURCE_LIMIT, reason=f"time budget of {cfg.timeout_sec}s exceeded")
        v.solver = None
        return v
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, old)


def run_verify(argv):
    args = verify_parser().parse_args(argv)
    try:
        if args.propertyfile:
            check_propertyfile(args.propertyfile)
        ast = _read_program(args.file)
        cfg = _config(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for w in ast.warnings:
        print(f"warning: {w}", file=sys.stderr)
    p = g.lower(ast)
    for w in g.reachable_check(p):
        print(f"warning: {args.file}:{w.line}: {w.message}", file=sys.stderr)
    if args.dump_goto:
        print(g.dump(p))
    if cfg.strategy == ex.BFS and cfg.mode == ex.PARTIAL_INCREMENTAL:
        print(f"warning: {ex.BFS_PI_WARNING}", file=sys.stderr)

    start = time.monotonic()
    try:
        verdict = _explore_with_watchdog(p, cfg)
    except UnsupportedWidth as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    wall = time.monotonic() - start

    if verdict.outcome == ex.UNSAFE and not replay_witness(p, verdict.witness):
        print(FAILED)
        print("error: internal: witness does not replay concretely", file=sys.stderr)
        return EXIT_LIMIT

    if verdict.outcome == ex.SAFE:
        line, code = (SUCCESS_BOUNDED if verdict.bounded else SUCCESS), EXIT_SAFE
    elif verdict.outcome == ex.UNSAFE:
        line, code = FAILED, EXIT_UNSAFE
    else:
        line, code = LIMIT, EXIT_LIMIT
    print(line)
    if verdict.bounded:
        print("note: some paths were cut off by --unwind; the result may be unsound",
              file=sys.stderr)
    if verdict.outcome == ex.RESOURCE_LIMIT and verdict.reason:
        print(f"note: {verdict.reason}", file=sys.stderr)
    if verdict.outcome == ex.UNSAFE:
        loc = verdict.witness.assert_location
        print(f"note: assertion at {args.file}:{loc[2]} in {loc[0]} can fail", file=sys.stderr)
    if args.stats:
        stats = ex.collect_stats(verdict)
        for k in STAT_KEYS:
            print(f"{k}: {stats[k]}")
        for k, v in stats.items():
            if k not in STAT_KEYS:
                print(f"{k}: {v}")
        print(f"wall_time: {wall:.3f}")

    if verdict.outcome == ex.RESOURCE_LIMIT:
        return code
    meta = {"producer": f"pinacolada {__version__}", "programfile": args.file,
            "architecture": f"{cfg.int_width}bit"}
    try:
        if args.graphml_witness:
            emit_graphml(verdict.witness, args.graphml_witness, meta)
        if args.json_witness:
            report = RunReport(verdict.outcome, verdict.bounded, cfg.strategy, cfg.mode,
                               cfg.int_width, round(wall, 6), ex.collect_stats(verdict),
                               verdict.witness, args.file)
            emit_json(report, args.json_witness)
        if args.dump_cnf and getattr(verdict, "solver", None) is not None:
            with open(args.dump_cnf, "w", encoding="utf-8") as fh:
                fh.write(verdict.solver.dimacs())
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "sat":
        return run_sat(argv[1:])
    if argv and argv[0] == "oracle":
        return run_oracle(argv[1:])
    try:
        return run_verify(argv)
    except RecursionError:
        print("error: program nesting too deep", file=sys.stderr)
        return EXIT_ERROR


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
