import pytest

from grammatic.chc import Feasible, Infeasible, der_path, derivation_feasible, solve
from grammatic.grammar import (ConstraintBuilder, RunGrammar, ackermannize, check_simulation, complete, completion,
                               control_path_grammar, region, refutes, simulation_constraints)
from grammatic.interp import find_run, random_runs
from grammatic.ir import enumerate_paths
from grammatic.logic import FALSE, INT, And, Eq, FuncDecl, Int, Le, Sat, Unsat, bound_var
from grammatic.skeleton import Schedule, Split, build_skeleton
from grammatic.sympath import is_feas

LOCKSTEP = Schedule((Split("L10", "L4", 1),))


def test_region_facts(build_inspect):
    body = region(build_inspect, "L4", "L4")
    assert {"tmp", "tail", "i"} <= body.modified
    assert body.allocates and body.stored_fields() == {"next"}
    # tail := tmp lets tmp's value reach the store base
    assert body.store_bases("next") == frozenset({"tail", "tmp"})
    scan = region(build_inspect, "L11", "L11")
    assert not scan.allocates and not scan.stored_fields()


def test_ackermann_names_and_congruence():
    f = FuncDecl("f_next", (INT, INT), INT)
    o = FuncDecl("o_p", (INT,), INT)
    p0, p1 = bound_var("p0", INT), bound_var("p1", INT)
    t = Eq(f(p0, o(p0)), f(p0, o(p1)))
    (out,), cong, meaning = ackermannize([t])
    assert {"o_p.pos0", "o_p.pos1", "f_next.pos0.o_p.pos0", "f_next.pos0.o_p.pos1"} == set(meaning)
    assert len(cong) == 1
    assert all(s.op != "app" for s in [out])


def test_control_path_grammar_derives_exactly_the_paths(build_inspect):
    sk = build_skeleton(build_inspect, LOCKSTEP)
    S = control_path_grammar(sk)
    for p in enumerate_paths(build_inspect, build_inspect.l_init, build_inspect.l_error, 10):
        assert isinstance(derivation_feasible(S, sk.derivation_of(p)), Sat)


def test_false_completion_is_infeasible(build_inspect):
    sk = build_skeleton(build_inspect, Schedule())
    S = completion(sk, lambda c: FALSE)
    assert isinstance(solve(S, timeout=60), Infeasible)


def test_plain_grammar_has_a_spurious_derivation(build_inspect):
    G = complete(build_skeleton(build_inspect, Schedule()))
    res = solve(G.system, timeout=120)
    assert isinstance(res, Feasible) and res.witness is not None
    p = der_path(G.system, res.witness)
    assert p.labels[-1] == build_inspect.l_error
    assert not is_feas(build_inspect, p)


def test_grammars_do_not_refute_feasible_paths(corpus):
    P = corpus["buildInspect_unsafe"]
    G = complete(build_skeleton(P, LOCKSTEP))
    p = next(q for q in enumerate_paths(P, P.l_init, P.l_error, 12) if find_run(P, q) is not None)
    assert not refutes(G, p)


def test_runs_simulate_in_the_lockstep_grammar(build_inspect):
    G = complete(build_skeleton(build_inspect, LOCKSTEP))
    rep = check_simulation(G, depth=12, trials=50)
    assert rep.ok, rep.violations[:3]
    assert rep.runs_checked >= 50


def test_wrong_constraint_breaks_simulation(build_inspect):
    sk = build_skeleton(build_inspect, LOCKSTEP)
    cb = ConstraintBuilder(sk)

    def wrong(c):
        # claims the counter never exceeds zero after any edge
        return And(cb.full(c), Le(cb.enc.dv("i", cb.point(c.ctrl_edge[1])), Int(0)))

    G = RunGrammar(completion(sk, wrong), sk, build_inspect)
    rep = check_simulation(G, depth=12, trials=50)
    assert not rep.ok


def test_simulation_pins_positions(build_inspect):
    G = complete(build_skeleton(build_inspect, Schedule()))
    run = random_runs(build_inspect, 6, 1, seed=3)[0]
    D, extra = simulation_constraints(G, run)
    assert len(D.clauses) == len(run.path)
    assert isinstance(derivation_feasible(G.system, D, extra=extra, rooted=False), Sat)
    off = [Eq(bound_var("p0@0", INT), Int(99))]
    assert isinstance(derivation_feasible(G.system, D, extra=extra + off, rooted=False), Unsat)
