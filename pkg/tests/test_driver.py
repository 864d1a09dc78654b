import json

import pytest

from grammatic.driver import (BenchRow, Safe, Trace, Unknown, Unsafe, VerifierConfig, baseline_verify, lttp,
                              materialize_run, progress_monitor, report_markdown, run_benchmarks, write_report)
from grammatic.interp import check_run
from grammatic.ir import ControlPath, enumerate_paths, prepare

from conftest import CORPUS, STRAIGHT, program

REACHABLE = """
datavar x;
init A;
error ERR;
A: x := havoc -> B;
B: assume(x > 1) -> C;
C: assert(x < 2) -> D;
"""

GUARDED = """
datavar x;
init A;
error ERR;
A: x := 0 -> B;
B: assume(x == 1) -> C;
C: assert(x == 0) -> D;
"""


def test_progress_monitor():
    a, b = ControlPath(("A", "B")), ControlPath(("A", "C", "B"))
    assert progress_monitor([a, b]) is None
    msg = progress_monitor([a, b, ControlPath(("A", "B"))])
    assert msg is not None and "0 and 2" in msg


def test_config_is_validated():
    with pytest.raises(ValueError):
        VerifierConfig(timeout=0)
    with pytest.raises(ValueError):
        VerifierConfig(unroll_depth=0)


def test_straight_line_program_is_safe():
    trace = Trace()
    v = lttp(program(STRAIGHT), VerifierConfig(timeout=120), trace)
    assert isinstance(v, Safe)
    assert progress_monitor(trace.feedback) is None


def test_reachable_error_gives_a_checked_run():
    P = program(REACHABLE)
    v = lttp(P, VerifierConfig(timeout=120))
    assert isinstance(v, Unsafe)
    Q = prepare(P)
    assert check_run(Q, v.run) and v.run.path.labels[-1] == Q.l_error
    assert v.run.choices[0][0] > 1


def test_materialized_run_uses_values_outside_the_default_domain():
    P = prepare(program(REACHABLE.replace("x > 1", "x > 40").replace("x < 2", "x < 41")))
    (p,) = list(enumerate_paths(P, P.l_init, P.l_error, 6))
    run = materialize_run(P, p)
    assert run is not None and run.choices[0][0] > 40


def test_baseline_on_guarded_program():
    assert isinstance(baseline_verify(program(GUARDED), VerifierConfig(timeout=60)), Safe)
    assert isinstance(baseline_verify(program(REACHABLE), VerifierConfig(timeout=60)), Unsafe)


def test_budget_exhaustion_is_unknown(build_inspect):
    from grammatic.skeleton import Budget
    v = lttp(build_inspect, VerifierConfig(timeout=300, budgets=(Budget(1, 1),)))
    assert isinstance(v, Unknown) and "budget" in v.reason


def test_empty_corpus(tmp_path):
    rows = run_benchmarks(tmp_path, out_dir=tmp_path / "out")
    assert rows == []
    assert (tmp_path / "out" / "report.md").read_text().count("\n") == 2
    assert json.loads((tmp_path / "out" / "report.json").read_text()) == []


def test_small_corpus_report(tmp_path):
    (tmp_path / "straight.ir").write_text(STRAIGHT)
    (tmp_path / "reach_unsafe.ir").write_text(REACHABLE)
    rows = run_benchmarks(tmp_path, VerifierConfig(timeout=120), tmp_path / "out")
    by = {r.name: r for r in rows}
    assert by["straight"].verdict == "safe" and by["reach_unsafe"].verdict == "unsafe"
    assert by["reach_unsafe"].expected == "unsafe" and by["reach_unsafe"].baseline == "unsafe"
    assert (tmp_path / "out" / "report.png").stat().st_size > 0
    data = json.loads((tmp_path / "out" / "report.json").read_text())
    assert {d["name"] for d in data} == {"straight", "reach_unsafe"}


def test_report_shapes(tmp_path):
    row = BenchRow("x", 3, "safe", "safe", 2, 4, 5, 0.5, 1.5, 2.5, "unknown", "unknown", 0.1, "")
    assert row.matches
    md = report_markdown([row])
    assert md.splitlines()[2].startswith("| x | 3 | safe | safe | 2 | 4 | 5 |")
    paths = write_report([row], tmp_path)
    assert all(p.exists() for p in paths.values())


def test_mutant_corpus_exists():
    names = sorted(p.stem for p in CORPUS.glob("*_unsafe.ir"))
    assert names == ["allocator_unsafe", "breakCycle_unsafe", "buildInspect_unsafe", "finiteCycle_unsafe",
                     "lag2_unsafe"]
