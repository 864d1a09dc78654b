"""Horn systems built by hand: a counter that must stay below a bound."""

import pytest

from grammatic.chc import (Application, CHCSystem, Clause, Derivation, Feasible, Infeasible, MetadataMissing,
                           RelPred, der_path, derivation_feasible, emit_horn, enumerate_derivations,
                           find_feasible_derivation, ground_atoms, horn_check, solve)
from grammatic.logic import INT, And, Eq, FALSE, Ge, Int, Le, Lt, Sat, Unsat, bound_var, Add

x, y = bound_var("x", INT), bound_var("y", INT)
INV = RelPred("Inv", (INT,))
BAD = RelPred("Bad", (INT,))


def counter(bound: int, reach: int) -> CHCSystem:
    """x starts at 0 and steps by 1 while below ``bound``; Bad when x reaches ``reach``."""
    return CHCSystem((
        Clause("init", (), Eq(x, Int(0)), Application(INV, (x,))),
        Clause("step", (Application(INV, (x,)),), And(Lt(x, Int(bound)), Eq(y, Add(x, Int(1)))),
               Application(INV, (y,))),
        Clause("bad", (Application(INV, (x,)),), Ge(x, Int(reach)), Application(BAD, (x,))),
    ), BAD)


def test_linear_only():
    with pytest.raises(ValueError):
        Clause("two", (Application(INV, (x,)), Application(INV, (y,))), Eq(x, y), Application(INV, (x,)))


def test_arity_is_checked():
    with pytest.raises(ValueError):
        Application(INV, (x, y))


def test_emission_is_deterministic():
    assert emit_horn(counter(3, 5)) == emit_horn(counter(3, 5))
    s = emit_horn(counter(3, 5))
    assert s.startswith("(set-logic HORN)") and "(=> (Bad q0) false)" in s


def test_derivations_shortest_first():
    S = counter(3, 2)
    ds = list(enumerate_derivations(S, 5))
    assert [len(d) for d in ds] == [2, 3, 4, 5]
    assert ds[0].clauses == (2, 0)
    assert ds[1].clauses == (2, 1, 0)


def test_derivation_feasibility():
    S = counter(3, 2)
    assert isinstance(derivation_feasible(S, Derivation((2, 0))), Unsat)
    assert isinstance(derivation_feasible(S, Derivation((2, 1, 1, 0))), Sat)


def test_horn_solver_verdicts():
    assert horn_check(counter(3, 5), 60) == "unreachable"
    assert horn_check(counter(3, 3), 60) == "reachable"


def test_solve_finds_witness_by_bounded_search():
    res = solve(counter(3, 3), 60)
    assert isinstance(res, Feasible) and res.witness == Derivation((2, 1, 1, 1, 0))
    assert isinstance(solve(counter(3, 5), 60), Infeasible)


def test_solve_deepens_past_the_first_bound():
    res = solve(counter(20, 12), 60, pre_depth=4, depth_cap=16)
    assert isinstance(res, Feasible) and len(res.witness) == 14


def test_bounded_search_reports_exhaustiveness():
    d, exhaustive = find_feasible_derivation(counter(3, 5), 6)
    assert d is None and exhaustive


def test_false_constraints_give_an_infeasible_system():
    S = CHCSystem(tuple(Clause(c.name, c.body, FALSE, c.head) for c in counter(3, 3).clauses), BAD)
    assert isinstance(solve(S, 60), Infeasible)


def test_der_path_needs_provenance():
    with pytest.raises(MetadataMissing):
        der_path(counter(3, 3), Derivation((2, 0)))


def test_ground_atoms():
    sx = [["proof", ["let", [["a", ["Inv", "3"]]], ["Bad", ["-", "1"]]], ["Inv", "x"]]]
    assert ground_atoms(sx, {"Inv", "Bad"}) == [("Inv", (3,)), ("Bad", (-1,))]
