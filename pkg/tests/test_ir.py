import pytest

from grammatic.ir import (Alloc, Binary, basic_parts, Const, ControlPath, DataOp, IRError, STORES, Var, coalesce, contains_alloc,
                          enumerate_paths, eval_expr, format_program, normalize_heap_targets, parse_program, prepare)

from conftest import CORPUS, STRAIGHT, corpus_names, program


def test_assert_expands_to_two_edges():
    P = program(STRAIGHT)
    outs = {li.target: li.instr for li in P.out_edges("C")}
    assert set(outs) == {"ERR", "D"}
    assert outs["D"] == DataOp("assume", None, Binary("==", Var("x"), Const(2)))


def test_format_round_trip(corpus):
    for name in corpus_names():
        P = parse_program((CORPUS / f"{name}.ir").read_text(), name)
        Q = parse_program(format_program(P), name)
        assert Q.instructions == P.instructions
        assert (Q.l_init, Q.l_error) == (P.l_init, P.l_error)


@pytest.mark.parametrize("text, fragment", [
    ("datavar x;\ninit A;\nerror E;\nA: y := 1 -> B;\n", "undeclared"),
    ("datavar x;\ninit A;\nerror E;\nA: x := 1 -> B;\nA: x := 2 -> B;\n", "duplicate"),
    ("datavar x;\nA: x := 1 -> B;\n", "init"),
    ("datavar x;\nobjvar p;\ninit A;\nerror E;\nA: x := p -> B;\n", "=="),
])
def test_parse_errors(text, fragment):
    with pytest.raises(IRError, match=fragment):
        parse_program(text)


def test_eval_expr():
    e = Binary("+", Var("x"), Binary("*", Const(2), Var("y")))
    assert eval_expr(e, {"x": 1, "y": 3}) == 7


def test_paths_are_shortest_first_and_well_formed(build_inspect):
    P = build_inspect
    paths = list(enumerate_paths(P, P.l_init, P.l_error, 12))
    assert paths
    assert [len(p) for p in paths] == sorted(len(p) for p in paths)
    for p in paths:
        assert p.is_path_of(P) and p.labels[0] == P.l_init and p.labels[-1] == P.l_error
    assert len({p.labels for p in paths}) == len(paths)


def test_coalesce_keeps_endpoints_and_shrinks(corpus):
    for name in corpus_names():
        raw = parse_program((CORPUS / f"{name}.ir").read_text(), name)
        Q = coalesce(raw)
        assert Q.l_init == raw.l_init and Q.l_error == raw.l_error
        assert len(Q.instructions) <= len(raw.instructions)
        for li in Q.instructions:
            assert sum(isinstance(x, Alloc) for x in basic_parts(li.instr)) <= 1


def test_heap_targets_have_one_incoming_edge(corpus):
    for P in corpus.values():
        for li in P.instructions:
            if isinstance(li.instr, STORES) or contains_alloc(li.instr):
                assert len(P.in_edges(li.target)) == 1, (P.name, li)


def test_prepare_without_coalescing_keeps_every_edge():
    P = program(STRAIGHT)
    assert len(prepare(P, do_coalesce=False).instructions) == len(P.instructions)
    assert len(prepare(P).instructions) < len(P.instructions)


def test_control_path_basics():
    P = program(STRAIGHT)
    p = ControlPath(("A", "B", "C", "ERR"))
    assert len(p) == 3 and list(p.nodes) == [0, 1, 2, 3] and p.edges[0] == (0, 1)
    assert p.is_path_of(P)
    assert not ControlPath(("A", "C")).is_path_of(P)
    assert str(p) == "A -> B -> C -> ERR"
