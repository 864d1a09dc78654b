"""The verification loop, the array baseline verifier, and the benchmark harness."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from .baseline import array_path_oracle, baseline_solve
from .chc import Feasible, Infeasible, SolveUnknown, der_path, solve
from .grammar import RunGrammar, complete
from .interp import DEFAULT_DOMAIN, Run, Stuck, check_run, find_run, havoc_count, initial_state, step
from .ir import ControlPath, DataOp, Program, basic_parts, load_program, prepare
from .skeleton import BUDGET_SCHEDULE, Budget, BudgetExhausted, syn_skeleton
from .sympath import IndeterminateFeasibility, NotRefutable, deps, feasibility_model, is_feas

__all__ = ["Safe", "Unsafe", "Unknown", "Verdict", "VerifierConfig", "lttp", "progress_monitor",
           "baseline_verify", "array_path_oracle", "run_benchmarks", "materialize_run"]

log = logging.getLogger(__name__)


@dataclass
class Safe:
    relations: int
    clauses: int
    iterations: int
    schedule: str = ""

    kind = "safe"


@dataclass
class Unsafe:
    run: Run
    iterations: int = 0

    kind = "unsafe"


@dataclass
class Unknown:
    reason: str
    iterations: int = 0

    kind = "unknown"


Verdict = Union[Safe, Unsafe, Unknown]


@dataclass
class VerifierConfig:
    smt_cmd: Optional[str] = None
    chc_cmd: Optional[str] = None
    timeout: float = 1800.0  # wall-clock cap for one verification job
    query_timeout: float = 60.0  # per SMT query
    chc_timeout: float = 900.0  # per HORN solver call
    unroll_depth: int = 8  # bounded derivation search before calling the HORN solver
    budgets: tuple = BUDGET_SCHEDULE
    coalesce: bool = True
    feedback_cap: int = 64

    def __post_init__(self):
        if self.timeout <= 0 or self.query_timeout <= 0 or self.chc_timeout <= 0:
            raise ValueError("timeouts must be positive")
        if self.unroll_depth <= 0 or self.feedback_cap <= 0:
            raise ValueError("depths and caps must be positive")


@dataclass
class Trace:
    """What one verification job did, for reports and progress checks."""

    feedback: list = field(default_factory=list)  # ControlPath per iteration
    schedules: list = field(default_factory=list)
    grammars: list = field(default_factory=list)  # (RunGrammar, [(path, neighborhood)]) per iteration
    synth_time: float = 0.0
    solve_time: float = 0.0
    feas_time: float = 0.0
    deps_time: float = 0.0


def progress_monitor(history: Sequence[ControlPath]) -> Optional[str]:
    """None when no control path repeats, else a description of the first repeat."""
    seen = {}
    for k, p in enumerate(history):
        if p.labels in seen:
            return f"path collected at iterations {seen[p.labels]} and {k}: {p}"
        seen[p.labels] = k
    return None


def _synthesize(P: Program, F: list, nus: dict, cfg: VerifierConfig, trace: Trace) -> RunGrammar:
    t = time.monotonic()
    items = [(p, nus[p.labels]) for p in F]
    try:
        for b in cfg.budgets:
            try:
                sk = syn_skeleton(P, items, b, cfg.query_timeout, cfg.smt_cmd)
                trace.schedules.append(sk.schedule.describe())
                G = complete(sk)
                trace.grammars.append((G, items))
                return G
            except BudgetExhausted:
                log.info("no skeleton within budget %s", b)
        raise BudgetExhausted(cfg.budgets[-1])
    finally:
        trace.synth_time += time.monotonic() - t


def lttp(P: Program, cfg: Optional[VerifierConfig] = None, trace: Optional[Trace] = None) -> Verdict:
    """Synthesize run grammars from infeasible counterexample paths until one has no solution-free query."""
    cfg = cfg or VerifierConfig()
    trace = trace if trace is not None else Trace()
    P = prepare(P, cfg.coalesce)
    deadline = time.monotonic() + cfg.timeout
    F: list[ControlPath] = []
    nus: dict = {}
    while True:
        it = len(F) + 1
        if time.monotonic() > deadline:
            return Unknown("timeout", it)
        try:
            G = _synthesize(P, F, nus, cfg, trace)
        except BudgetExhausted as e:
            return Unknown(f"no run grammar within budget ({e.budget})", it)
        t = time.monotonic()
        remaining = max(1.0, min(cfg.chc_timeout, deadline - time.monotonic()))
        res = solve(G.system, remaining, cfg.chc_cmd, cfg.smt_cmd, pre_depth=cfg.unroll_depth,
                    query_timeout=cfg.query_timeout)
        trace.solve_time += time.monotonic() - t
        if isinstance(res, Infeasible):
            sk = G.provenance
            return Safe(len(sk.relations), len(sk.clauses), it, sk.schedule.describe())
        if isinstance(res, SolveUnknown):
            return Unknown(f"HORN solver: {res.reason}", it)
        if res.witness is None:
            return Unknown("solver reports a reachable query but no derivation was found", it)
        p = der_path(G.system, res.witness)
        t = time.monotonic()
        try:
            feasible = is_feas(P, p, cfg.query_timeout, cfg.smt_cmd)
        except IndeterminateFeasibility as e:
            return Unknown(f"path feasibility undecided: {e}", it)
        finally:
            trace.feas_time += time.monotonic() - t
        if feasible:
            run = materialize_run(P, p, cfg)
            if run is None:
                return Unknown(f"feasible path without a reconstructed run: {p}", it)
            return Unsafe(run, it)
        if p.labels in nus:
            return Unknown(f"counterexample {p} repeated", it)
        t = time.monotonic()
        try:
            nus[p.labels] = deps(P, p, cfg.query_timeout, cfg.smt_cmd, verify=False)
        except (IndeterminateFeasibility, NotRefutable) as e:
            return Unknown(f"neighborhood computation failed: {e}", it)
        finally:
            trace.deps_time += time.monotonic() - t
        F.append(p)
        trace.feedback.append(p)
        log.info("iteration %d: refuting %s", it, p)
        if len(F) > cfg.feedback_cap:
            return Unknown(f"feedback set exceeded {cfg.feedback_cap} paths", it)


def materialize_run(P: Program, p: ControlPath, cfg: Optional[VerifierConfig] = None) -> Optional[Run]:
    """A checked run along a feasible path.

    Havoc values are read off the encoding's model where a havoc is the
    last write of its variable on the edge; otherwise, or if replay fails,
    the run is searched over the default domain and then a wider one.
    """
    cfg = cfg or VerifierConfig()
    choices = _model_choices(P, p, cfg)
    if choices is not None:
        run = _replay(P, p, choices)
        if run is not None and check_run(P, run):
            return run
    for dom in (DEFAULT_DOMAIN, range(-8, 17)):
        run = find_run(P, p, dom)
        if run is not None and check_run(P, run):
            return run
    return None


def _model_choices(P: Program, p: ControlPath, cfg: VerifierConfig) -> Optional[list]:
    try:
        pe, sat = feasibility_model(P, p, cfg.query_timeout, cfg.smt_cmd)
    except IndeterminateFeasibility:
        return None
    if sat is None:
        return None
    model = sat.model
    out = []
    for k, i in enumerate(p.instructions(P)):
        parts = basic_parts(i)
        vals = []
        for j, part in enumerate(parts):
            if isinstance(part, DataOp) and part.kind == "havoc":
                later = any(getattr(q, "dst", None) == part.dst for q in parts[j + 1:])
                if later:
                    return None
                vals.append(model.get(pe.enc.dv(part.dst, pe.nodes[k + 1])))
        if any(v is None for v in vals):
            return None
        out.append(tuple(vals))
    return out


def _replay(P: Program, p: ControlPath, choices: list) -> Optional[Run]:
    s = initial_state(P)
    states = [s]
    try:
        for i, ch in zip(p.instructions(P), choices):
            s = step(P, s, i, list(ch))
            states.append(s)
    except Stuck:
        return None
    return Run(p, tuple(states), tuple(choices))


# ---------------------------------------------------------------------------
# Baseline


def baseline_verify(P: Program, cfg: Optional[VerifierConfig] = None) -> Verdict:
    """One relation per location over locals and field arrays, solved externally."""
    cfg = cfg or VerifierConfig()
    Q = prepare(P, cfg.coalesce)
    res = baseline_solve(Q, min(cfg.timeout, cfg.chc_timeout), cfg.chc_cmd)
    if res == "safe":
        return Safe(len(Q.locations), len(Q.instructions) + 2, 1, "one relation per location")
    if res == "reachable":
        from .ir import enumerate_paths
        for path in enumerate_paths(Q, Q.l_init, Q.l_error, 16):
            run = find_run(Q, path)
            if run is not None:
                return Unsafe(run, 1)
        return Unknown("baseline reports a reachable error but no short run was found", 1)
    return Unknown("baseline HORN solver timeout or unknown", 1)


# ---------------------------------------------------------------------------
# Benchmarks

EXPECTED = {
    "allocator": "safe", "binary": "safe", "buildInspect": "safe", "ctxSensitive": "unknown",
    "finiteCycle": "safe", "lag2": "safe", "order": "safe", "peel": "safe", "tree": "safe",
    "sameLength": "safe", "breakCycle": "safe", "simpleSearch": "safe", "unary": "safe", "uniqueItem": "safe",
}
EXPECTED_BASELINE = {"lag2": "safe"}


@dataclass
class BenchRow:
    name: str
    instructions: int
    verdict: str
    expected: str
    iterations: int
    relations: Optional[int]
    clauses: Optional[int]
    synth_time: float
    solve_time: float
    total_time: float
    baseline: str
    baseline_expected: str
    baseline_time: float
    detail: str = ""

    @property
    def matches(self) -> bool:
        return self.verdict == self.expected and self.baseline == self.baseline_expected


def _expected(name: str, table: dict, default: str) -> str:
    if name.endswith("_unsafe"):
        return "unsafe"
    return table.get(name, default)


def bench_one(path: Path, cfg: VerifierConfig, baseline: bool = True) -> BenchRow:
    name = path.stem
    P = load_program(path)
    trace = Trace()
    t = time.monotonic()
    try:
        v = lttp(P, cfg, trace)
    except Exception as e:  # recorded per benchmark, the harness keeps going
        v = Unknown(f"error: {type(e).__name__}: {e}")
    total = time.monotonic() - t
    bv, bt = "skipped", 0.0
    if baseline:
        t = time.monotonic()
        try:
            bv = baseline_verify(P, cfg).kind
        except Exception as e:
            bv = f"error: {e}"
        bt = time.monotonic() - t
    if isinstance(v, Unsafe):
        detail = f"run of {len(v.run.path.labels) - 1} edges, checked={check_run(prepare(P, cfg.coalesce), v.run)}"
    elif isinstance(v, Unknown):
        detail = v.reason
    else:
        detail = v.schedule
    base_expected = _expected(name, EXPECTED_BASELINE, "unknown") if baseline else "skipped"
    return BenchRow(name, len(P.instructions), v.kind, _expected(name, EXPECTED, "safe"), v.iterations,
                    getattr(v, "relations", None), getattr(v, "clauses", None), round(trace.synth_time, 2),
                    round(trace.solve_time, 2), round(total, 2), bv, base_expected, round(bt, 2), detail)


def run_benchmarks(corpus: Union[str, Path], cfg: Optional[VerifierConfig] = None, out_dir: Optional[Path] = None,
                   only: Optional[Sequence[str]] = None, baseline: bool = True) -> list[BenchRow]:
    """Verify every ``*.ir`` in ``corpus``; write markdown, JSON and a timing figure to ``out_dir``."""
    cfg = cfg or VerifierConfig()
    files = sorted(Path(corpus).glob("*.ir"))
    if only:
        files = [f for f in files if f.stem in only]
    rows = []
    for f in files:
        log.info("benchmark %s", f.stem)
        rows.append(bench_one(f, cfg, baseline))
    if out_dir is not None:
        write_report(rows, Path(out_dir))
    return rows


def report_markdown(rows: Sequence[BenchRow]) -> str:
    head = ("| benchmark | instrs | verdict | expected | iter | rel | cls | synth s | solve s | total s "
            "| baseline | baseline expected | baseline s |")
    lines = [head, "|" + "---|" * 13]
    for r in rows:
        lines.append(f"| {r.name} | {r.instructions} | {r.verdict} | {r.expected} | {r.iterations} "
                     f"| {r.relations if r.relations is not None else '-'} "
                     f"| {r.clauses if r.clauses is not None else '-'} | {r.synth_time} | {r.solve_time} "
                     f"| {r.total_time} | {r.baseline} | {r.baseline_expected} | {r.baseline_time} |")
    return "\n".join(lines) + "\n"


def report_json(rows: Sequence[BenchRow]) -> str:
    return json.dumps([{**asdict(r), "matches": r.matches} for r in rows], indent=2) + "\n"


def write_report(rows: Sequence[BenchRow], out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    md = out_dir / "report.md"
    js = out_dir / "report.json"
    fig = out_dir / "report.png"
    md.write_text(report_markdown(rows))
    js.write_text(report_json(rows))
    plot_report(rows, fig)
    return {"markdown": md, "json": js, "figure": fig}


def plot_report(rows: Sequence[BenchRow], path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = [r.name for r in rows]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.6 * len(rows) + 2), 4))
    xs = range(len(rows))
    synth = [r.synth_time for r in rows]
    solv = [r.solve_time for r in rows]
    other = [max(0.0, r.total_time - r.synth_time - r.solve_time) for r in rows]
    ax.bar(xs, synth, label="skeleton search")
    ax.bar(xs, solv, bottom=synth, label="HORN solving")
    ax.bar(xs, other, bottom=[a + b for a, b in zip(synth, solv)], label="other")
    for x, r in zip(xs, rows):
        ax.text(x, r.total_time, r.verdict, ha="center", va="bottom", fontsize=7)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(names, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("seconds")
    ax.set_title("verification time per benchmark")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
