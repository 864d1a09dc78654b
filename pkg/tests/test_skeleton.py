import dataclasses

import pytest

from grammatic.grammar import complete, control_path_grammar, refutes
from grammatic.ir import ControlPath, enumerate_paths
from grammatic.skeleton import (Budget, BudgetExhausted, Schedule, Split, build_skeleton, candidate_schedules,
                                check_skeleton, realizes, split_is_valid, syn_skeleton, witness_locations)
from grammatic.sympath import deps, is_feas

from conftest import STRAIGHT, program


def test_split_validity(build_inspect):
    P = build_inspect
    assert split_is_valid(P, Split("L10", "L4", 1))
    assert not split_is_valid(P, Split("L6", "L4", 1))  # inside the loop
    assert not split_is_valid(P, Split("L3", "L4", 1))  # before its trigger
    assert not split_is_valid(P, Split(P.l_error, "L4", 1))


def test_control_path_grammar_is_complete_and_unambiguous(build_inspect):
    sk = build_skeleton(build_inspect, Schedule())
    rep = check_skeleton(build_inspect, sk, depth=10)
    assert rep.ok, rep.violations
    assert rep.paths_checked > 0
    assert sk.max_arity == 1


@pytest.mark.parametrize("sched", [
    Schedule((Split("L10", "L4", 1),)),
    Schedule((Split("L10", "L4", 2), Split("L15", "L4", 1)), ("L3",), 3),
])
def test_split_and_register_schedules_check(build_inspect, sched):
    sk = build_skeleton(build_inspect, sched)
    rep = check_skeleton(build_inspect, sk, depth=10)
    assert rep.ok, rep.violations
    assert sk.max_arity > 1


def test_duplicated_clause_is_reported_ambiguous(build_inspect):
    sk = build_skeleton(build_inspect, Schedule())
    dup = dataclasses.replace(sk.clauses[-1], name="dup")
    bad = dataclasses.replace(sk, clauses=sk.clauses + [dup])
    rep = check_skeleton(build_inspect, bad, depth=10)
    assert any("ambiguous" in v for v in rep.violations)
    assert any("derivations" in v for v in rep.violations)


def test_derivations_map_back_to_their_paths(build_inspect):
    P = build_inspect
    sk = build_skeleton(P, Schedule((Split("L10", "L4", 1),)))
    S = control_path_grammar(sk)
    for p in enumerate_paths(P, P.l_init, P.l_error, 12):
        d = sk.derivation_of(p)
        assert d is not None
        assert sk.derivation_path(S, d) == p


def test_straight_line_program():
    P = program(STRAIGHT)
    sk = syn_skeleton(P, [])
    (p,) = list(enumerate_paths(P, P.l_init, P.l_error, 10))
    assert len(sk.derive(p)) == len(p)
    assert check_skeleton(P, sk).ok


def test_empty_feedback_gives_the_plain_skeleton(build_inspect):
    sk = syn_skeleton(build_inspect, [])
    assert sk.schedule == Schedule()


def test_budget_is_enforced(build_inspect):
    with pytest.raises(BudgetExhausted):
        syn_skeleton(build_inspect, [], Budget(1, 1))


def test_candidates_grow_in_registers(build_inspect):
    cs = candidate_schedules(build_inspect, witness_locations(build_inspect))
    depths = [c.depth for c in cs]
    assert depths == sorted(depths) and cs[0] == Schedule()


def test_feedback_path_is_realized_and_refuted(build_inspect):
    P = build_inspect
    p = next(q for q in enumerate_paths(P, P.l_init, P.l_error, 12) if not is_feas(P, q))
    nu = deps(P, p)
    sk = syn_skeleton(P, [(p, nu)])
    assert realizes(sk, p, nu)[0]
    rep = check_skeleton(P, sk, [(p, nu)], depth=10)
    assert rep.ok, rep.violations
    assert refutes(complete(sk), p)


def test_underivable_path_is_not_realized(build_inspect):
    sk = build_skeleton(build_inspect, Schedule())
    bogus = ControlPath(("L0", "L3", "ERR"))
    ok, missing = realizes(sk, bogus, None)
    assert not ok and missing[0][0] == "underivable"
