"""Acceptance checks.  Each test prints one ``criterion N: PASS|FAIL`` line.

The end-to-end runs (buildInspect, lag2, peel) are shared between the
criteria that inspect their traces, so the module is slow: expect tens of
minutes on one core.
"""

import itertools
import time

import pytest

from grammatic.baseline import array_path_oracle
from grammatic.driver import Safe, Trace, Unknown, Unsafe, VerifierConfig, baseline_verify, lttp, progress_monitor
from grammatic.grammar import check_simulation
from grammatic.interp import check_run, find_run
from grammatic.ir import enumerate_paths, load_program, prepare
from grammatic.logic import Sat
from grammatic.skeleton import check_skeleton
from grammatic.sympath import PathEncoder, deps, is_feas

from conftest import CORPUS, GOLDEN

END_TO_END = ("buildInspect", "lag2", "peel")
MUTANTS = ("allocator_unsafe", "breakCycle_unsafe", "buildInspect_unsafe", "finiteCycle_unsafe", "lag2_unsafe")


def report(capsys, n: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")


def programs(coalesce: bool):
    for f in sorted(CORPUS.glob("*.ir")):
        yield f.stem, prepare(load_program(f), coalesce)


@pytest.fixture(scope="module")
def runs():
    """name -> (verdict, trace, seconds) for the end-to-end benchmarks."""
    out = {}
    for name in END_TO_END:
        trace = Trace()
        t = time.monotonic()
        v = lttp(load_program(CORPUS / f"{name}.ir"), VerifierConfig(timeout=1800), trace)
        out[name] = (v, trace, time.monotonic() - t)
    return out


def test_criterion_1_encoding_agrees_with_oracles(capsys):
    disagreements, checked, concrete = [], 0, 0
    for coalesce in (True, False):
        for name, P in programs(coalesce):
            for p in itertools.islice(enumerate_paths(P, P.l_init, P.l_error, 12), 500):
                checked += 1
                f = is_feas(P, p)
                if f != array_path_oracle(P, p):
                    disagreements.append((name, "array", str(p)))
                run = find_run(P, p)
                if run is not None:
                    concrete += 1
                    if not f:
                        disagreements.append((name, "run", str(p)))
    ok = not disagreements and checked > 0
    report(capsys, 1, ok, f"{checked} paths, {concrete} with runs, {len(disagreements)} disagreements")
    assert ok, disagreements[:5]


def test_criterion_2_deps_is_minimal(capsys):
    infeasible = []
    for depth in (12, 16):
        infeasible = []
        for coalesce in (True, False):
            for name, P in programs(coalesce):
                for p in itertools.islice(enumerate_paths(P, P.l_init, P.l_error, depth), 500):
                    if not is_feas(P, p):
                        infeasible.append((name, P, p))
        if len(infeasible) >= 25:
            break
    violations = []
    for name, P, p in infeasible:
        nu = deps(P, p)
        pe = PathEncoder(P, p)
        if isinstance(pe.check(nu.as_dict(), 60, None), Sat):
            violations.append((name, str(p), "not refuting"))
        for n, m in nu.pairs():
            d = nu.as_dict()
            d[n].discard(m)
            if not isinstance(pe.check(d, 60, None), Sat):
                violations.append((name, str(p), f"({n}, {m}) removable"))
    ok = len(infeasible) >= 25 and not violations
    report(capsys, 2, ok, f"{len(infeasible)} infeasible paths, {len(violations)} violations")
    assert ok, violations[:5]


def test_criterion_3_skeletons_are_valid(runs, capsys):
    violations, checked = [], 0
    for name, (_, trace, _) in runs.items():
        for G, items in trace.grammars:
            rep = check_skeleton(G.program, G.provenance, items, depth=10)
            checked += 1
            violations += [(name, v) for v in rep.violations]
    ok = checked > 0 and not violations
    report(capsys, 3, ok, f"{checked} skeletons, {len(violations)} violations")
    assert ok, violations[:5]


def test_criterion_4_runs_simulate(runs, capsys):
    violations, grammars, fewest = [], 0, None
    for name, (_, trace, _) in runs.items():
        for G, _ in trace.grammars:
            rep = check_simulation(G, depth=12, trials=50)
            grammars += 1
            fewest = rep.runs_checked if fewest is None else min(fewest, rep.runs_checked)
            violations += [(name, v) for v in rep.violations]
    ok = grammars > 0 and not violations and fewest >= 50
    report(capsys, 4, ok, f"{grammars} grammars, at least {fewest} runs each, {len(violations)} violations")
    assert ok, violations[:5]


def test_criterion_5_end_to_end_verdicts(runs, capsys):
    got = {name: (type(v).__name__, round(t)) for name, (v, _, t) in runs.items()}
    ok = all(isinstance(v, Safe) and t <= 1800 for v, _, t in runs.values())
    t = time.monotonic()
    lag2 = baseline_verify(load_program(CORPUS / "lag2.ir"), VerifierConfig(timeout=120))
    got["baseline lag2"] = (type(lag2).__name__, round(time.monotonic() - t))
    t = time.monotonic()
    bi = baseline_verify(load_program(CORPUS / "buildInspect.ir"), VerifierConfig(timeout=300))
    got["baseline buildInspect"] = (type(bi).__name__, round(time.monotonic() - t))
    ok &= isinstance(lag2, Safe) and isinstance(bi, Unknown)
    ctx = lttp(load_program(CORPUS / "ctxSensitive.ir"), VerifierConfig(timeout=1800))
    got["ctxSensitive"] = (type(ctx).__name__, None)
    ok &= isinstance(ctx, Unknown)
    report(capsys, 5, ok, ", ".join(f"{k}={v}" + (f" {s}s" if s is not None else "") for k, (v, s) in got.items()))
    assert ok, got


def test_criterion_6_mutants_are_unsafe(capsys):
    bad = []
    for name in MUTANTS:
        P = load_program(CORPUS / f"{name}.ir")
        t = time.monotonic()
        v = lttp(P, VerifierConfig(timeout=600))
        Q = prepare(P)
        if not (isinstance(v, Unsafe) and check_run(Q, v.run) and v.run.path.labels[-1] == Q.l_error
                and time.monotonic() - t <= 600):
            bad.append((name, v))
    ok = not bad
    report(capsys, 6, ok, f"{len(MUTANTS) - len(bad)}/{len(MUTANTS)} mutants unsafe with checked runs")
    assert ok, bad


def test_criterion_7_progress(runs, capsys):
    safe = {name: trace for name, (v, trace, _) in runs.items() if isinstance(v, Safe)}
    repeats = {name: progress_monitor(trace.feedback) for name, trace in safe.items()}
    repeats = {k: v for k, v in repeats.items() if v}
    ok = bool(safe) and not repeats
    report(capsys, 7, ok, f"{len(safe)} safe traces, {len(repeats)} with a repeated path")
    assert ok, repeats


def test_criterion_8_emission_is_deterministic(capsys):
    import test_golden
    P = prepare(load_program(CORPUS / "buildInspect.ir"))
    first, second = test_golden._scripts(P), test_golden._scripts(P)
    same = first == second and all((GOLDEN / k).read_text() == v for k, v in first.items())
    report(capsys, 8, same, f"{len(first)} scripts compared with golden copies")
    assert same
