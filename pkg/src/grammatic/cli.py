"""Command line entry point: ``grammatic <command> <file>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from .ir import ControlPath, IRError, Program, enumerate_paths, load_program, prepare

EXIT_SAFE, EXIT_UNSAFE, EXIT_UNKNOWN, EXIT_USAGE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--smt-cmd", help="SMT solver command (default: $GRAMMATIC_SMT or z3 -in -smt2)")
    common.add_argument("--chc-cmd", help="HORN solver command (default: $GRAMMATIC_CHC or z3 -in -smt2)")
    common.add_argument("--timeout", type=float, default=1800.0, help="wall-clock seconds for the job")
    common.add_argument("--unroll-depth", type=int, default=8, help="bounded search depth before the HORN solver")
    common.add_argument("--max-relations", type=int, help="skeleton relation budget (single budget)")
    common.add_argument("--arity", type=int, help="skeleton arity budget (single budget)")
    common.add_argument("--no-coalesce", action="store_true", help="keep straight-line edges separate")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="grammatic", description="Safety verification of heap programs with run grammars.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, hlp in [("verify", "run the grammar-synthesis verifier"),
                      ("baseline", "run the array-theory baseline verifier")]:
        sub.add_parser(name, parents=[common], help=hlp).add_argument("file")
    for name, hlp in [("feasible", "decide feasibility of control paths"),
                      ("deps", "minimal refuting neighborhood of an infeasible path"),
                      ("skeleton", "synthesize a skeleton and dump it as JSON"),
                      ("emit-chc", "write the HORN script of a synthesized run grammar"),
                      ("interpret", "execute a path or a random walk concretely")]:
        sp = sub.add_parser(name, parents=[common], help=hlp)
        sp.add_argument("file")
        sp.add_argument("--path", action="append", default=[],
                        help="control path as comma-separated locations (repeatable)")
        if name == "emit-chc":
            sp.add_argument("-o", "--output", help="script file; a .json provenance sidecar is written next to it")
        if name == "interpret":
            sp.add_argument("--seed", type=int, default=0)
    b = sub.add_parser("bench", parents=[common], help="run the benchmark corpus")
    b.add_argument("file", help="corpus directory")
    b.add_argument("--out", default="bench-report", help="directory for report.md, report.json, report.png")
    b.add_argument("--only", action="append", default=[], help="benchmark name (repeatable)")
    b.add_argument("--no-baseline", action="store_true")
    return p


def _config(a):
    from .driver import VerifierConfig
    from .skeleton import BUDGET_SCHEDULE, Budget
    budgets = BUDGET_SCHEDULE
    if a.max_relations is not None or a.arity is not None:
        last = BUDGET_SCHEDULE[-1]
        budgets = (Budget(a.max_relations or last.max_relations, a.arity or last.arity),)
    return VerifierConfig(smt_cmd=a.smt_cmd, chc_cmd=a.chc_cmd, timeout=a.timeout, unroll_depth=a.unroll_depth,
                          budgets=budgets, coalesce=not a.no_coalesce)


def _paths(P: Program, specs: list, depth: int) -> list[ControlPath]:
    if specs:
        out = []
        for s in specs:
            p = ControlPath(tuple(x.strip() for x in s.split(",") if x.strip()))
            if not p.is_path_of(P):
                raise ValueError(f"not a control path of the program: {s}")
            out.append(p)
        return out
    return list(enumerate_paths(P, P.l_init, P.l_error, depth))


def _verdict_out(v, P: Program, as_json: bool) -> int:
    from .driver import Safe, Unsafe
    if isinstance(v, Safe):
        data = {"verdict": "safe", "relations": v.relations, "clauses": v.clauses, "iterations": v.iterations,
                "schedule": v.schedule}
        code = EXIT_SAFE
    elif isinstance(v, Unsafe):
        data = {"verdict": "unsafe", "iterations": v.iterations, "path": list(v.run.path.labels),
                "choices": [list(c) for c in v.run.choices], "run": v.run.to_json(P)}
        code = EXIT_UNSAFE
    else:
        data = {"verdict": "unknown", "reason": v.reason, "iterations": v.iterations}
        code = EXIT_UNKNOWN
    if as_json:
        print(json.dumps(data, indent=2, default=str))
    else:
        print(data["verdict"].upper())
        for k, val in data.items():
            if k not in ("verdict", "run"):
                print(f"  {k}: {val}")
    return code


def main(argv: Optional[list] = None) -> int:
    a = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _config(a)
        if a.command == "bench":
            return _bench(a, cfg)
        P0 = load_program(a.file)
    except (OSError, IRError, ValueError) as e:
        print(f"grammatic: {e}", file=sys.stderr)
        return EXIT_USAGE
    P = prepare(P0, cfg.coalesce)
    try:
        return _dispatch(a, cfg, P0, P)
    except ValueError as e:
        print(f"grammatic: {e}", file=sys.stderr)
        return EXIT_USAGE


def _dispatch(a, cfg, P0: Program, P: Program) -> int:
    from . import driver
    if a.command == "verify":
        return _verdict_out(driver.lttp(P0, cfg), P, a.json)
    if a.command == "baseline":
        return _verdict_out(driver.baseline_verify(P0, cfg), P, a.json)
    if a.command == "feasible":
        return _feasible(a, cfg, P)
    if a.command == "deps":
        return _deps(a, cfg, P)
    if a.command in ("skeleton", "emit-chc"):
        return _grammar(a, cfg, P)
    if a.command == "interpret":
        return _interpret(a, P)
    raise ValueError(f"unknown command {a.command}")


def _feasible(a, cfg, P: Program) -> int:
    from .sympath import IndeterminateFeasibility, is_feas
    rows, any_feasible, undecided = [], False, False
    for p in _paths(P, a.path, a.unroll_depth):
        try:
            f = is_feas(P, p, cfg.query_timeout, cfg.smt_cmd)
        except IndeterminateFeasibility:
            f = None
            undecided = True
        any_feasible |= bool(f)
        rows.append({"path": list(p.labels), "feasible": f})
    if a.json:
        print(json.dumps(rows, indent=2))
    else:
        for r in rows:
            status = {True: "feasible", False: "infeasible", None: "unknown"}[r["feasible"]]
            print(f"{status:10} {' -> '.join(r['path'])}")
    return EXIT_UNSAFE if any_feasible else EXIT_UNKNOWN if undecided else EXIT_SAFE


def _first_infeasible(P: Program, cfg, specs: list) -> list[ControlPath]:
    from .sympath import is_feas
    paths = _paths(P, specs, a_depth := cfg.unroll_depth + 8)
    if specs:
        return paths
    for p in paths:
        if not is_feas(P, p, cfg.query_timeout, cfg.smt_cmd):
            return [p]
    raise ValueError(f"no infeasible error path within {a_depth} edges")


def _deps(a, cfg, P: Program) -> int:
    from .sympath import NotRefutable, deps
    out = []
    for p in _first_infeasible(P, cfg, a.path):
        try:
            nu = deps(P, p, cfg.query_timeout, cfg.smt_cmd)
        except NotRefutable:
            print(f"path is feasible: {p}", file=sys.stderr)
            return EXIT_UNSAFE
        out.append({"path": list(p.labels), "neighborhood": {str(k): sorted(v) for k, v in nu.as_dict().items()}})
    if a.json:
        print(json.dumps(out, indent=2))
    else:
        for r in out:
            print(" -> ".join(r["path"]))
            for k, v in r["neighborhood"].items():
                if v:
                    print(f"  {k}: {v}")
    return EXIT_SAFE


def _grammar(a, cfg, P: Program) -> int:
    from .chc import emit_horn
    from .grammar import complete
    from .skeleton import BudgetExhausted, syn_skeleton
    from .sympath import deps
    items = []
    for p in _paths(P, a.path, 0) if a.path else []:
        items.append((p, deps(P, p, cfg.query_timeout, cfg.smt_cmd, verify=False)))
    sk = None
    for b in cfg.budgets:
        try:
            sk = syn_skeleton(P, items, b, cfg.query_timeout, cfg.smt_cmd)
            break
        except BudgetExhausted:
            continue
    if sk is None:
        print("no skeleton within the budget schedule", file=sys.stderr)
        return EXIT_UNKNOWN
    if a.command == "skeleton":
        print(json.dumps(sk.to_json(), indent=2))
        return EXIT_SAFE
    G = complete(sk)
    script = emit_horn(G.system)
    meta = {"program": P.name, "skeleton": sk.to_json(),
            "arguments": {c.clause.name: sorted(c.meaning) for c in G.meta.compiled}}
    if a.output:
        out = Path(a.output)
        out.write_text(script)
        out.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")
    else:
        sys.stdout.write(script)
    return EXIT_SAFE


def _interpret(a, P: Program) -> int:
    from .interp import find_run, random_runs
    if a.path:
        runs = []
        for p in _paths(P, a.path, 0):
            r = find_run(P, p)
            if r is None:
                print(f"no run along {p} over the default domain", file=sys.stderr)
                return EXIT_UNKNOWN
            runs.append(r)
    else:
        runs = random_runs(P, 40, 1, a.seed)
    for r in runs:
        data = {"path": list(r.path.labels), "choices": [list(c) for c in r.choices], "states": r.to_json(P)}
        if a.json:
            print(json.dumps(data, indent=2, default=str))
        else:
            print(" -> ".join(data["path"]))
            for st in data["states"]:
                print(f"  {st['node']:3} {st['location']:8} {st['state']}")
    reached_error = any(r.path.labels[-1] == P.l_error for r in runs)
    return EXIT_UNSAFE if reached_error else EXIT_SAFE


def _bench(a, cfg) -> int:
    from .driver import report_json, report_markdown, run_benchmarks
    corpus = Path(a.file)
    if not corpus.is_dir():
        raise OSError(f"not a directory: {corpus}")
    rows = run_benchmarks(corpus, cfg, Path(a.out), only=a.only or None, baseline=not a.no_baseline)
    print(report_json(rows) if a.json else report_markdown(rows), end="")
    print(f"report written to {a.out}/report.md, report.json, report.png", file=sys.stderr)
    return EXIT_SAFE if all(r.matches for r in rows) else EXIT_UNKNOWN


if __name__ == "__main__":
    sys.exit(main())
