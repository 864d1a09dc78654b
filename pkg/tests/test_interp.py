import pytest

from grammatic.interp import (Run, Stuck, check_run, find_run, initial_state, iter_runs, random_runs, step)
from grammatic.ir import ControlPath, enumerate_paths, parse_program, prepare

from conftest import CORPUS, NIL_DEREF, STRAIGHT, program


def test_straight_line_error_path_is_infeasible():
    P = program(STRAIGHT)
    assert find_run(P, ControlPath(("A", "B", "C", "ERR"))) is None
    r = find_run(P, ControlPath(("A", "B", "C", "D")))
    assert r is not None and check_run(P, r)
    assert r.states[-1].data_ctx["x"] == 2


def test_nil_dereference_is_stuck():
    P = program(NIL_DEREF)
    with pytest.raises(Stuck):
        step(P, initial_state(P), P.instr_at("A", "B"))


def test_build_inspect_has_no_short_error_run(build_inspect):
    P = build_inspect
    assert list(iter_runs(P, enumerate_paths(P, P.l_init, P.l_error, 14))) == []


def test_flipped_assertion_has_a_one_iteration_run():
    text = (CORPUS / "buildInspect.ir").read_text().replace("assert(c != 0)", "assert(c == 0)")
    P = prepare(parse_program(text))
    runs = list(iter_runs(P, enumerate_paths(P, P.l_init, P.l_error, 10)))
    assert runs and all(check_run(P, r) for r in runs)


def test_check_run_rejects_tampered_states(build_inspect):
    P = build_inspect
    r = random_runs(P, 8, 1, seed=3)[0]
    assert check_run(P, r)
    bad = Run(r.path, r.states[:-1] + (r.states[0],), r.choices)
    assert not check_run(P, bad)


def test_random_runs_are_checked_distinct_and_seeded(build_inspect):
    P = build_inspect
    a = random_runs(P, 12, 20, seed=7)
    b = random_runs(P, 12, 20, seed=7)
    assert [x.path for x in a] == [x.path for x in b]
    assert len({(x.path.labels, x.choices) for x in a}) == len(a)
    assert all(check_run(P, x) and len(x.path) <= 12 for x in a)


def test_run_json_lists_every_node(build_inspect):
    P = build_inspect
    r = random_runs(P, 6, 1, seed=1)[0]
    js = r.to_json(P)
    assert [e["location"] for e in js] == list(r.path.labels)
