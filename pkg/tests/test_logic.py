from grammatic.logic import (BOOL, INT, POINT, Add, And, Eq, FuncDecl, Gt, Implies, Int, Ite, Lt, Not, Or, Sat,
                             Unsat, Vocabulary, bound_var, check_sat, const, evaluate, parse_sexprs, simplify,
                             substitute, symbol, to_smt)
from grammatic.logic.solver import build_script


def test_printing_is_stable():
    x = const("x", INT)
    t = And(Gt(x, Int(1)), Not(Eq(x, Int(-3))))
    assert to_smt(t) == to_smt(And(Gt(x, Int(1)), Not(Eq(x, Int(-3)))))
    assert "(- 3)" in to_smt(t)


def test_symbols_are_quoted_when_needed():
    assert symbol("abc") == "abc"
    assert symbol("a b").startswith("|")


def test_simplify_folds_constants():
    x = const("x", INT)
    assert simplify(And(Eq(Int(1), Int(1)), Gt(x, Int(0)))) == Gt(x, Int(0))
    assert simplify(Or(Eq(Int(1), Int(2)), Eq(Int(3), Int(3)))).is_true()


def test_substitute_and_evaluate():
    v = bound_var("v", INT)
    f = FuncDecl("f", (INT,), INT)
    t = Add(f(v), Int(2))
    assert evaluate(t, lambda d, args: args[0] * 10, {"v": 4}) == 42
    assert substitute(t, {v: Int(1)}) == Add(f(Int(1)), Int(2))


def test_check_sat_and_model():
    x = const("x", INT)
    vocab = Vocabulary(decls=[x.value])
    v = check_sat(vocab, [Gt(x, Int(3)), Lt(x, Int(5))], query=[x])
    assert isinstance(v, Sat) and v[x] == 4
    assert isinstance(check_sat(vocab, [Gt(x, Int(3)), Lt(x, Int(4))]), Unsat)


def test_uninterpreted_sort_queries():
    f = FuncDecl("f", (POINT,), POINT)
    a = const("a", POINT)
    vocab = Vocabulary([POINT], [f, a.value])
    assert isinstance(check_sat(vocab, [Not(Eq(f(a), f(a)))]), Unsat)


def test_script_is_deterministic():
    x = const("x", INT)
    vocab = Vocabulary(decls=[x.value])
    s1 = build_script(vocab, [Implies(Gt(x, Int(0)), Eq(Ite(Gt(x, Int(1)), x, Int(0)), x))])
    s2 = build_script(vocab, [Implies(Gt(x, Int(0)), Eq(Ite(Gt(x, Int(1)), x, Int(0)), x))])
    assert s1 == s2 and s1.endswith("(check-sat)\n")


def test_parse_sexprs():
    assert parse_sexprs("sat ((x 1) (y (- 2)))") == ["sat", [["x", "1"], ["y", ["-", "2"]]]]
