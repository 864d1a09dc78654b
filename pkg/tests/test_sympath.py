import pytest

from grammatic.interp import find_run
from grammatic.ir import ControlPath, enumerate_paths, parse_program, prepare
from grammatic.logic import Sat
from grammatic.sympath import (NotRefutable, PathEncoder, RefutingNeighborhood, deps, deps_with_stats,
                               feasibility_model, is_feas)

from conftest import CORPUS, STRAIGHT, program

# one build iteration, one inspect iteration, then the failing assertion
ONE_ROUND = ControlPath(tuple("L0 L3 L4 L6 L7 L4 L10 L11 L12 L13 L11 L15 ERR".split()))


def unsafe_build_inspect():
    text = (CORPUS / "buildInspect.ir").read_text().replace("assert(c != 0)", "assert(c == 0)")
    return prepare(parse_program(text, "flipped"))


def test_one_round_path_is_infeasible(build_inspect):
    assert ONE_ROUND.is_path_of(build_inspect)
    assert not is_feas(build_inspect, ONE_ROUND)


def test_feasible_paths_agree_with_interpreter():
    P = unsafe_build_inspect()
    for p in enumerate_paths(P, P.l_init, P.l_error, 10):
        assert is_feas(P, p) == (find_run(P, p) is not None), p


def test_straight_line():
    P = prepare(program(STRAIGHT), do_coalesce=False)
    assert not is_feas(P, ControlPath(("A", "B", "C", "ERR")))
    assert is_feas(P, ControlPath(("A", "B", "C", "D")))


def test_deps_is_refuting_and_minimal(build_inspect):
    P = build_inspect
    res = deps_with_stats(P, ONE_ROUND, verify=True)
    nu = res.nu
    pe = PathEncoder(P, ONE_ROUND)
    assert not isinstance(pe.check(nu.as_dict(), 30, None), Sat)
    for n, m in nu.pairs():
        d = nu.as_dict()
        d[n].discard(m)
        assert isinstance(pe.check(d, 30, None), Sat), (n, m)
    assert res.solver_calls <= res.checks
    # the load into node 9 (L13) must see the store that produced node 4 (L7)
    assert (9, 4) in nu.pairs()


def test_deps_rejects_feasible_paths():
    P = unsafe_build_inspect()
    p = next(p for p in enumerate_paths(P, P.l_init, P.l_error, 10) if find_run(P, p))
    with pytest.raises(NotRefutable):
        deps(P, p)


def test_empty_neighborhood_suffices_for_data_only_refutation():
    P = prepare(program(STRAIGHT), do_coalesce=False)
    assert deps(P, ControlPath(("A", "B", "C", "ERR"))).pairs() == []


def test_neighborhood_json_round_trip():
    nu = RefutingNeighborhood.of({3: {1, 2}, 5: set(), 7: {0}})
    assert RefutingNeighborhood.from_json(nu.to_json()) == nu
    assert nu(3) == frozenset({1, 2}) and nu(5) == frozenset()


def test_feasibility_model_reports_data_values():
    P = unsafe_build_inspect()
    p = next(p for p in enumerate_paths(P, P.l_init, P.l_error, 10) if find_run(P, p))
    pe, sat = feasibility_model(P, p)
    assert sat is not None
    assert sat.model[pe.enc.dv("i", pe.nodes[0])] == 0
