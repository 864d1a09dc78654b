"""Update-history encoding of instructions and paths.

Every path point ``n`` carries the program state through unary functions
``x(n)`` / ``p(n)`` per variable.  Heap fields are *update histories*:
``f(n, o)`` is the point right after the most recent update of field ``f``
of object ``o`` (a store, or the allocation of ``o``).  An object is
identified with the point right after its allocation.

A load is constrained only against the candidate witnesses in its
neighborhood ``Q``; frames for heap histories range over the objects held
by variables at points in ``Q``.  With every node in every neighborhood the
encoding is exact for the path.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .ir import (Alloc, Binary, Const, ControlPath, DataLoad, DataOp, DataStore, Expr, Instruction, NilTest,
                 ObjAssign, ObjEq, ObjLoad, ObjStore, Program, Unary, Var, basic_parts, contains_alloc)
from .logic import (BOOL, FALSE, INT, POINT, TRUE, Add, And, Distinct, Eq, Formula, FuncDecl, Ge, Gt, Implies,
                    Int, Ite, Le, Lt, Mul, Neg, Not, Or, Sat, Sort, Sub, Term, Unknown, Unsat, Vocabulary,
                    build_script, counted_check_sat, simplify)
from .logic.terms import const


class IndeterminateFeasibility(Exception):
    """The solver could not decide a path query."""


class NotRefutable(Exception):
    """deps was asked to minimize a neighborhood for a feasible path."""


@dataclass(frozen=True)
class Witness:
    """A point that may be the most recent heap update for some fields."""

    fields: frozenset
    value: Callable[[str], Term] = field(compare=False)


class Encoding:
    """The T_Lang vocabulary of a program under a choice of point sort.

    With ``point_sort=POINT`` points and objects live in an uninterpreted
    sort with a ``nil`` constant.  With ``INT`` a point is its position on
    the path and ``nil`` is -1, which the Horn back end needs.
    """

    def __init__(self, program: Program, point_sort: Sort = POINT):
        self.program = program
        self.point = point_sort
        if point_sort == POINT:
            self._nil_decl: Optional[FuncDecl] = FuncDecl("nil", (), POINT)
            self.nil = self._nil_decl()
        else:
            self._nil_decl = None
            self.nil = Int(-1)
        ps = point_sort
        self.dvars = {x: FuncDecl(f"d_{x}", (ps,), INT) for x in program.data_vars}
        self.ovars = {p: FuncDecl(f"o_{p}", (ps,), ps) for p in program.obj_vars}
        self.fields = {f: FuncDecl(f"f_{f}", (ps, ps), ps) for f in program.data_fields + program.obj_fields}
        self.loc_fn = FuncDecl("Loc", (ps,), INT)
        self.succ_fn = FuncDecl("Succ", (ps,), ps)

    # vocabulary ----------------------------------------------------------

    def decls(self) -> list[FuncDecl]:
        out = [self._nil_decl] if self._nil_decl else []
        out += list(self.dvars.values()) + list(self.ovars.values()) + list(self.fields.values())
        out += [self.loc_fn, self.succ_fn]
        return out

    def vocabulary(self, extra: Iterable[FuncDecl] = ()) -> Vocabulary:
        v = Vocabulary([POINT] if self.point == POINT else [])
        for d in self.decls():
            v.add(d)
        for d in extra:
            v.add(d)
        return v

    def node(self, k: int) -> Term:
        return const(f"n{k}", self.point)

    # state terms -----------------------------------------------------------

    def dv(self, x: str, n: Term) -> Term:
        return self.dvars[x](n)

    def ov(self, p: str, n: Term) -> Term:
        return self.ovars[p](n)

    def hist(self, f: str, n: Term, o: Term) -> Term:
        return self.fields[f](n, o)

    def loc(self, n: Term) -> Term:
        return self.loc_fn(n)

    def succ(self, n: Term) -> Term:
        return self.succ_fn(n)

    def init_state(self, n: Term) -> Formula:
        return And([Eq(self.dv(x, n), Int(0)) for x in self.program.data_vars]
                   + [Eq(self.ov(p, n), self.nil) for p in self.program.obj_vars])

    def witness_of(self, incoming: Optional[Instruction], q: Term) -> Optional[Witness]:
        """Witness status of point ``q`` given the instruction that produced it."""
        if incoming is None:
            return None
        if isinstance(incoming, DataStore):
            y = incoming.src
            return Witness(frozenset({incoming.field}), lambda f, y=y, q=q: self.dv(y, q))
        if isinstance(incoming, ObjStore):
            y = incoming.src
            return Witness(frozenset({incoming.field}),
                           lambda f, y=y, q=q: self.ov(y, q) if y is not None else self.nil)
        if contains_alloc(incoming):
            return Witness(frozenset(self.fields), self._default)
        return None

    def _default(self, f: str) -> Term:
        return Int(0) if self.program.field_is_data(f) else self.nil

    # expressions -----------------------------------------------------------

    def expr(self, e: Expr, env: dict) -> Term:
        """Integer-valued term for ``e`` (booleans become 0/1)."""
        t = self._expr(e, env)
        return Ite(t, Int(1), Int(0)) if t.sort == BOOL else t

    def cond(self, e: Expr, env: dict) -> Formula:
        t = self._expr(e, env)
        return t if t.sort == BOOL else Not(Eq(t, Int(0)))

    def _expr(self, e: Expr, env: dict) -> Term:
        if isinstance(e, Const):
            return (TRUE if e.value else FALSE) if isinstance(e.value, bool) else Int(e.value)
        if isinstance(e, Var):
            return env[e.name]
        if isinstance(e, Unary):
            if e.op == "-":
                return Neg(self.expr(e.arg, env))
            return Not(self.cond(e.arg, env))
        op = e.op
        if op in ("&&", "||"):
            a, b = self.cond(e.left, env), self.cond(e.right, env)
            return And(a, b) if op == "&&" else Or(a, b)
        a, b = self.expr(e.left, env), self.expr(e.right, env)
        if op == "+":
            return Add(a, b)
        if op == "-":
            return Sub(a, b)
        if op == "*":
            return Mul(a, b)
        if op == "==":
            return Eq(a, b)
        if op == "!=":
            return Not(Eq(a, b))
        return {"<": Lt, "<=": Le, ">": Gt, ">=": Ge}[op](a, b)

    # the transition encoding -------------------------------------------------

    def symrel(self, instr: Instruction, n: Term, n2: Term, Q: Sequence[Term],
               witness: Callable[[Term], Optional[Witness]], fresh: Callable[[Sort, str], Term]) -> Formula:
        """Constraint relating the states at ``n`` and ``n2`` across ``instr``.

        ``witness(q)`` classifies the points of ``Q`` for loads; ``fresh``
        makes existential temporaries for havocs inside blocks.
        """
        P = self.program
        fields = list(self.fields)
        held = [(p, q) for q in Q for p in P.obj_vars]
        conj: list[Formula] = []

        if isinstance(instr, (DataLoad, ObjLoad, DataStore, ObjStore)):
            base = self.ov(instr.obj, n)
            conj.append(Not(Eq(base, self.nil)))
            if isinstance(instr, (DataLoad, ObjLoad)):
                f = instr.field
                h = self.hist(f, n, base)
                dst = self.dv(instr.dst, n2) if isinstance(instr, DataLoad) else self.ov(instr.dst, n2)
                for q in Q:
                    w = witness(q)
                    if w is not None and f in w.fields:
                        conj.append(Implies(Eq(h, q), Eq(dst, w.value(f))))
                conj += self._vars_eq(n, n2, skip={instr.dst})
                conj += self._fields_eq(n, n2, held, fields)
            else:
                f = instr.field
                target = self.ov(instr.obj, n2)
                conj.append(Eq(self.hist(f, n2, target), n2))
                conj += self._vars_eq(n, n2)
                conj += self._fields_eq(n, n2, held, [g for g in fields if g != f])
                for p, q in held:
                    o = self.ov(p, q)
                    conj.append(Implies(Not(Eq(o, target)), Eq(self.hist(f, n2, o), self.hist(f, n, o))))
            return And(conj)

        # straight-line block of data ops, allocations, tests and copies
        env_d = {x: self.dv(x, n) for x in P.data_vars}
        env_o = {p: self.ov(p, n) for p in P.obj_vars}
        allocated = False
        for k, part in enumerate(basic_parts(instr)):
            if isinstance(part, DataOp):
                if part.kind == "assume":
                    conj.append(self.cond(part.expr, env_d))
                elif part.kind == "havoc":
                    env_d[part.dst] = fresh(INT, f"{part.dst}{k}")
                else:
                    env_d[part.dst] = self.expr(part.expr, env_d)
            elif isinstance(part, Alloc):
                env_o[part.dst] = n2
                allocated = True
            elif isinstance(part, NilTest):
                env_d[part.dst] = Ite(Eq(env_o[part.obj], self.nil), Int(1), Int(0))
            elif isinstance(part, ObjEq):
                env_d[part.dst] = Ite(Eq(env_o[part.left], env_o[part.right]), Int(1), Int(0))
            elif isinstance(part, ObjAssign):
                env_o[part.dst] = env_o[part.src] if part.src is not None else self.nil
            else:
                raise TypeError(f"unexpected instruction {part!r} in block")
        single_havoc = isinstance(instr, DataOp) and instr.kind == "havoc"
        for x in P.data_vars:
            if single_havoc and x == instr.dst:
                continue
            conj.append(Eq(self.dv(x, n2), env_d[x]))
        for p in P.obj_vars:
            conj.append(Eq(self.ov(p, n2), env_o[p]))
        if allocated:
            for f in fields:
                conj.append(Eq(self.hist(f, n2, n2), n2))
            for p, q in held:
                o = self.ov(p, q)
                for f in fields:
                    conj.append(Implies(Not(Eq(o, n2)), Eq(self.hist(f, n2, o), self.hist(f, n, o))))
        else:
            conj += self._fields_eq(n, n2, held, fields)
        return And(conj)

    def _vars_eq(self, n: Term, n2: Term, skip=()) -> list[Formula]:
        P = self.program
        out = [Eq(self.dv(x, n2), self.dv(x, n)) for x in P.data_vars if x not in skip]
        out += [Eq(self.ov(p, n2), self.ov(p, n)) for p in P.obj_vars if p not in skip]
        return out

    def _fields_eq(self, n: Term, n2: Term, held, fields) -> list[Formula]:
        out = []
        for f in fields:
            for p, q in held:
                o = self.ov(p, q)
                out.append(Eq(self.hist(f, n2, o), self.hist(f, n, o)))
        return out


# ---------------------------------------------------------------------------
# Paths and neighborhoods


@dataclass(frozen=True)
class RefutingNeighborhood:
    """Sparse map node -> set of nodes; absent keys mean the empty set."""

    nu: tuple  # sorted ((node, (nodes...)), ...)

    @staticmethod
    def of(mapping: dict) -> "RefutingNeighborhood":
        return RefutingNeighborhood(tuple(sorted((k, tuple(sorted(v))) for k, v in mapping.items() if v)))

    @staticmethod
    def all(path: ControlPath) -> "RefutingNeighborhood":
        nodes = tuple(path.nodes)
        return RefutingNeighborhood(tuple((k, nodes) for k in nodes))

    def __call__(self, n: int) -> frozenset:
        return frozenset(self.as_dict().get(n, ()))

    def as_dict(self) -> dict:
        return {k: set(v) for k, v in self.nu}

    def pairs(self) -> list[tuple[int, int]]:
        return [(k, m) for k, v in self.nu for m in v]

    def to_json(self) -> str:
        return json.dumps({str(k): list(v) for k, v in self.nu}, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "RefutingNeighborhood":
        return RefutingNeighborhood.of({int(k): set(v) for k, v in json.loads(text).items()})


class PathEncoder:
    """SymPath for one path, with memoized per-edge conjuncts."""

    def __init__(self, program: Program, path: ControlPath):
        self.program = program
        self.path = path
        self.enc = Encoding(program)
        self.instrs = path.instructions(program)
        self.nodes = [self.enc.node(k) for k in path.nodes]
        self._temps: dict[str, FuncDecl] = {}
        self._cache: dict = {}

    def witness(self, q: Term) -> Optional[Witness]:
        k = self.nodes.index(q)
        return self.enc.witness_of(self.instrs[k - 1] if k > 0 else None, q)

    def edge(self, k: int, Q: frozenset) -> Formula:
        """symrel for the edge (k, k+1) with neighborhood Q of node k+1."""
        key = (k, Q)
        if key not in self._cache:
            def fresh(sort, hint, k=k):
                d = FuncDecl(f"t{k}_{hint}", (), sort)
                self._temps[d.name] = d
                return d()
            n, n2 = self.nodes[k], self.nodes[k + 1]
            self._cache[key] = self.enc.symrel(self.instrs[k], n, n2, [self.nodes[q] for q in sorted(Q)],
                                               self.witness, fresh)
        return self._cache[key]

    def background(self) -> list[Formula]:
        out = [Distinct(self.nodes + [self.enc.nil]) if len(self.nodes) > 0 else TRUE]
        if self.path.labels[0] == self.program.l_init:
            out.append(self.enc.init_state(self.nodes[0]))
        return out

    def formula(self, nu: dict) -> list[Formula]:
        return self.background() + [self.edge(k, frozenset(nu.get(k + 1, ()))) for k in range(len(self.instrs))]

    def vocabulary(self) -> Vocabulary:
        extra = [n.decl for n in self.nodes] + list(self._temps.values())
        return self.enc.vocabulary(extra)

    def check(self, nu: dict, timeout: float, cmd: Optional[str], query=()) -> object:
        fs = self.formula(nu)
        return counted_check_sat(self.vocabulary(), fs, timeout=timeout, cmd=cmd, query=query)


def symrel(P: Program, i: Instruction, n: int, n_next: int, Q: Iterable[int], path: ControlPath) -> Formula:
    """symrel on a path edge, with witnesses classified by ``path``."""
    pe = PathEncoder(P, path)
    assert path.instructions(P)[n] == i and n_next == n + 1
    return pe.edge(n, frozenset(Q))


def sympath(P: Program, p: ControlPath, nu: RefutingNeighborhood) -> Formula:
    pe = PathEncoder(P, p)
    return And(pe.formula(nu.as_dict()))


def path_script(P: Program, p: ControlPath, nu: Optional[RefutingNeighborhood] = None) -> str:
    """The SMT-LIB2 query is_feas (or a neighborhood check) sends for ``p``."""
    pe = PathEncoder(P, p)
    fs = pe.formula((nu or RefutingNeighborhood.all(p)).as_dict())
    return build_script(pe.vocabulary(), fs)


def _verdict(v, what: str) -> bool:
    if isinstance(v, Sat):
        return True
    if isinstance(v, Unsat):
        return False
    raise IndeterminateFeasibility(f"{what}: {v.reason}")


def is_feas(P: Program, p: ControlPath, timeout: float = 30.0, cmd: Optional[str] = None) -> bool:
    pe = PathEncoder(P, p)
    nu = RefutingNeighborhood.all(p).as_dict()
    return _verdict(pe.check(nu, timeout, cmd), "is_feas")


def feasibility_model(P: Program, p: ControlPath, timeout: float = 30.0, cmd: Optional[str] = None):
    """Sat model of the exact path encoding, with data and object values per node."""
    pe = PathEncoder(P, p)
    enc = pe.enc
    query = []
    for n in pe.nodes:
        query += [enc.dv(x, n) for x in P.data_vars]
        query += [enc.ov(o, n) for o in P.obj_vars]
    query += pe.nodes + [enc.nil]
    v = pe.check(RefutingNeighborhood.all(p).as_dict(), timeout, cmd, query=query)
    if isinstance(v, Sat):
        return pe, v
    if isinstance(v, Unsat):
        return pe, None
    raise IndeterminateFeasibility(v.reason)


@dataclass
class DepsResult:
    nu: RefutingNeighborhood
    checks: int
    solver_calls: int


def deps(P: Program, p: ControlPath, timeout: float = 30.0, cmd: Optional[str] = None,
         verify: bool = True) -> RefutingNeighborhood:
    return deps_with_stats(P, p, timeout, cmd, verify).nu


def deps_with_stats(P: Program, p: ControlPath, timeout: float = 30.0, cmd: Optional[str] = None,
                    verify: bool = True) -> DepsResult:
    """Greedy minimization of the all-nodes neighborhood.

    Pairs ``(n, n')`` are tried in lexicographic order; dropping ``n'`` from
    ``nu(n)`` is kept when the path stays refuted.  A trial whose encoding
    is syntactically unchanged reuses the previous verdict.
    """
    pe = PathEncoder(P, p)
    nodes = list(p.nodes)
    nu = {n: set(nodes) for n in nodes}
    calls = 1
    if _verdict(pe.check(nu, timeout, cmd), "deps") is True:
        raise NotRefutable(f"path {p} is feasible")
    checks = 1
    for n, m in itertools.product(nodes, nodes):
        checks += 1
        trial = nu[n] - {m}
        if n == 0 or pe.edge(n - 1, frozenset(trial)) == pe.edge(n - 1, frozenset(nu[n])):
            nu[n] = trial  # encoding unchanged, so still refuted
            continue
        calls += 1
        nu_t = dict(nu)
        nu_t[n] = trial
        if not _verdict(pe.check(nu_t, timeout, cmd), "deps"):
            nu[n] = trial
    result = RefutingNeighborhood.of(nu)
    if verify:
        d = result.as_dict()
        if _verdict(pe.check(d, timeout, cmd), "deps"):
            raise AssertionError("deps result is not refuting")
        for n, m in result.pairs():
            d2 = {k: set(v) for k, v in d.items()}
            d2[n].discard(m)
            if not _verdict(pe.check(d2, timeout, cmd), "deps"):
                raise AssertionError(f"deps result not minimal at ({n}, {m})")
    return DepsResult(result, checks, calls)
