"""Run grammars: skeletons completed with semantic clause constraints.

Clause constraints are first built over the program vocabulary with
integer points (a point is its position on the path, ``nil`` is -1, an
object is the point right after its allocation).  They are then compiled
to pure linear arithmetic by naming every function application with a
variable and adding the congruence facts the clause needs.  A relation's
arguments are the positions of its parameters, every variable at every
parameter, and every field history at a parameter for each object held by
a variable at a parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .chc import (Application, CHCSystem, Clause, Derivation, RelPred, derivation_feasible)
from .interp import Run
from .ir import (Alloc, ControlPath, enumerate_pinned_paths, DataLoad, DataOp, DataStore, Instruction, Location, NilTest, ObjAssign, ObjEq,
                 ObjLoad, ObjStore, Program, STORES, basic_parts, contains_alloc, reads, writes)
from .logic import (FALSE, INT, TRUE, Add, And, Eq, Formula, Ge, Gt, Implies, Int, Le, Not, Or, Sat, Term, Unsat,
                    bound_var, evaluate, simplify, subterms, substitute)
from .skeleton import ClauseSkeleton, Relation, SkeletonSystem
from .sympath import Encoding

UNALLOCATED = -2  # history value of nil and of objects not yet allocated, in run models
SIMULATION_DOMAIN = tuple(range(-3, 10))  # havoc values for sampled runs; wider than find_run's


# ---------------------------------------------------------------------------
# Static regions


@dataclass(frozen=True)
class Region:
    """Facts about every instruction that can run between two locations."""

    instrs: tuple

    @cached_property
    def parts(self) -> list:
        return [x for i in self.instrs for x in basic_parts(i)]

    @cached_property
    def modified(self) -> frozenset:
        out = set()
        for x in self.parts:
            if isinstance(x, DataOp) and x.dst is not None:
                out.add(x.dst)
            elif isinstance(x, (DataLoad, ObjLoad, Alloc, NilTest, ObjEq, ObjAssign)):
                out.add(x.dst)
        return frozenset(out)

    @cached_property
    def allocates(self) -> bool:
        return any(isinstance(x, Alloc) for x in self.parts)

    def stored_fields(self) -> frozenset:
        return frozenset(x.field for x in self.parts if isinstance(x, STORES))

    def store_bases(self, f: str) -> Optional[frozenset]:
        """Variables whose values at the region's start may be the base of a store to ``f``.

        None when a base may come from a load.
        """
        bases = {x.obj for x in self.parts if isinstance(x, STORES) and x.field == f}
        changed = True
        while changed:
            changed = False
            for x in self.parts:
                if isinstance(x, ObjAssign) and x.dst in bases and x.src is not None and x.src not in bases:
                    bases.add(x.src)
                    changed = True
        if any(isinstance(x, ObjLoad) and x.dst in bases for x in self.parts):
            return None
        return frozenset(bases)


def region(P: Program, a: Location, b: Location) -> Region:
    return Region(tuple(li.instr for li in P.instructions if li.pre in P.reach[a] and b in P.reach[li.target]))


# ---------------------------------------------------------------------------
# Clause constraints over the program vocabulary


class ConstraintBuilder:
    def __init__(self, sk: SkeletonSystem, project: bool = True):
        self.sk = sk
        self.project = project
        self.P = sk.program
        self.enc = Encoding(self.P, point_sort=INT)
        self._regions: dict = {}

    def point(self, i: int) -> Term:
        return bound_var(f"p{i}", INT)

    def region(self, a: Location, b: Location) -> Region:
        key = (a, b)
        if key not in self._regions:
            self._regions[key] = region(self.P, a, b)
        return self._regions[key]

    def incoming(self, loc: Location) -> Optional[Instruction]:
        ins = self.P.in_edges(loc)
        return ins[0].instr if len(ins) == 1 else None

    def kept(self, loc: Location) -> frozenset:
        """Variables a relation parameter at ``loc`` carries.

        Those live at ``loc``, plus what the single incoming instruction
        reads when ``loc`` is a witness point (a later load may read the
        value stored there).  With projection off, every variable.
        """
        P = self.P
        if not self.project:
            return frozenset(P.data_vars + P.obj_vars)
        out = set(P.live_variables[loc])
        ins = P.in_edges(loc)
        if len(ins) == 1 and (isinstance(ins[0].instr, STORES) or contains_alloc(ins[0].instr)):
            for part in basic_parts(ins[0].instr):
                out |= reads(part) | writes(part)
        return frozenset(out)

    def rel_terms(self, rel: Relation, pts: Sequence[Term]) -> list[Term]:
        """The argument terms of ``rel`` at points ``pts``."""
        P, enc = self.P, self.enc
        keep = [self.kept(loc) for loc in rel.locs]
        out = list(pts)
        for q, k in zip(pts, keep):
            out += [enc.dv(x, q) for x in P.data_vars if x in k]
            out += [enc.ov(p, q) for p in P.obj_vars if p in k]
        held = [[enc.ov(p, q) for p in P.obj_vars if p in k] for q, k in zip(pts, keep)]
        for f in P.data_fields + P.obj_fields:
            for j, q in enumerate(pts):
                # objects first held at later points meet these histories by congruence there
                scope = held if not self.project else held[:j + 1]
                out += [enc.hist(f, q, o) for objs in scope for o in objs]
        return out

    def held(self, pts: Sequence[Term]) -> list[Term]:
        return [self.enc.ov(p, q) for q in pts for p in self.P.obj_vars]

    def phi0(self, c: ClauseSkeleton) -> Formula:
        a, b = c.ctrl_edge
        return Eq(self.point(b), Add(self.point(a), Int(1)))

    def phi1(self, c: ClauseSkeleton) -> Formula:
        a, b = c.ctrl_edge
        instr = self.P.instr_at(c.loc_map[a], c.loc_map[b])
        pts = [self.point(i) for i in c.order]
        locs = {self.point(i): c.loc_map[i] for i in c.points}

        def witness(q):
            return self.enc.witness_of(self.incoming(locs[q]), q)

        def fresh(sort, hint):
            return bound_var(f"t.{hint}", sort)

        return self.enc.symrel(instr, self.point(a), self.point(b), pts, witness, fresh)

    def phi3(self, c: ClauseSkeleton) -> Formula:
        """Frames across the stretches between consecutive clause points."""
        P, enc = self.P, self.enc
        conj = []
        objs = self.held([self.point(i) for i in c.order])
        for u, v in zip(c.order, c.order[1:]):
            if (u, v) == tuple(c.ctrl_edge):
                continue
            pu, pv = self.point(u), self.point(v)
            R = self.region(c.loc_map[u], c.loc_map[v])
            for x in P.data_vars:
                if x not in R.modified:
                    conj.append(Eq(enc.dv(x, pv), enc.dv(x, pu)))
            for p in P.obj_vars:
                if p not in R.modified:
                    conj.append(Eq(enc.ov(p, pv), enc.ov(p, pu)))
            stored = R.stored_fields()
            for f in P.data_fields + P.obj_fields:
                if f in stored:
                    bases = R.store_bases(f)
                    if bases is None:
                        continue
                else:
                    bases = frozenset()
                for o in objs:
                    guard = [Not(Eq(o, enc.ov(q, pu))) for q in sorted(bases)]
                    if R.allocates:
                        guard.append(Le(o, pu))
                    eq = Eq(enc.hist(f, pv, o), enc.hist(f, pu, o))
                    conj.append(Implies(And(guard), eq) if guard else eq)
        return And(conj)

    def background(self, c: ClauseSkeleton) -> Formula:
        P, enc = self.P, self.enc
        conj = [Ge(self.point(c.order[0]), Int(0))]
        for u, v in zip(c.order, c.order[1:]):
            if (u, v) != tuple(c.ctrl_edge):
                conj.append(Gt(self.point(v), self.point(u)))
        for i in c.points:
            q = self.point(i)
            for p in P.obj_vars:
                o = enc.ov(p, q)
                conj.append(Or(Eq(o, enc.nil), And(Ge(o, Int(0)), Le(o, q))))
        if c.action == "init":
            conj.append(Eq(self.point(0), Int(0)))
            conj.append(enc.init_state(self.point(0)))
        return And(conj)

    def location_only(self, c: ClauseSkeleton) -> Formula:
        a, b = c.ctrl_edge
        conj = [self.phi0(c), Ge(self.point(c.order[0]), Int(0))]
        for u, v in zip(c.order, c.order[1:]):
            if (u, v) != tuple(c.ctrl_edge):
                conj.append(Gt(self.point(v), self.point(u)))
        return And(conj)

    def full(self, c: ClauseSkeleton) -> Formula:
        return And(self.background(c), self.phi0(c), self.phi1(c), self.phi3(c))


def clause_constraint(sk: ClauseSkeleton, meta: SkeletonSystem, P: Program) -> Formula:
    """The clause constraint over the program vocabulary with integer points."""
    return ConstraintBuilder(meta).full(sk)


# ---------------------------------------------------------------------------
# Compilation to linear arithmetic


def _name(t: Term, names: dict) -> str:
    if t.op == "var":
        return t.value.replace("p", "pos", 1) if t.value.startswith("p") else t.value
    if t.op == "lit":
        return "nil" if t.value == -1 else str(t.value)
    return names[t]


def ackermannize(terms: Sequence[Term]) -> tuple[list[Term], list[Term], dict]:
    """Replace function applications by variables.

    Returns the rewritten terms, the congruence facts, and the meaning of
    every introduced variable (the original application over points).
    """
    names: dict[Term, str] = {}
    var_of: dict[Term, Term] = {}
    meaning: dict[str, Term] = {}
    apps: list[Term] = []
    for t in terms:
        for s in subterms(t):
            if s.op == "app" and s not in var_of:
                decl = s.value
                parts = [decl.name] + [_name(a, names) for a in s.args]
                nm = ".".join(parts)
                names[s] = nm
                v = bound_var(nm, s.sort)
                var_of[s] = v
                meaning[nm] = s
                apps.append(s)
    out = [substitute(t, var_of) for t in terms]
    cong = []
    groups: dict = {}
    for s in apps:
        if len(s.args) == 2:
            groups.setdefault((s.value, s.args[0]), []).append(s)
    for (_, _), group in groups.items():
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                a, b = group[i], group[j]
                oa, ob = substitute(a.args[1], var_of), substitute(b.args[1], var_of)
                cong.append(Implies(Eq(oa, ob), Eq(var_of[a], var_of[b])))
    return out, cong, meaning


@dataclass
class CompiledClause:
    clause: Clause
    meaning: dict  # variable name -> application over clause points


@dataclass
class GrammarMeta:
    skeleton: SkeletonSystem
    compiled: list  # CompiledClause per clause, same order as the system's clauses

    def derivation_path(self, S: CHCSystem, D: Derivation) -> ControlPath:
        return self.skeleton.derivation_path(S, D)

    def derivations_from_atoms(self, S: CHCSystem, atoms: list, slack: int = 16) -> Iterator[Derivation]:
        """Derivations whose paths agree with the ground relation instances.

        A relation's leading arguments are the positions of its points, so
        each instance pins a location at some positions; the gaps are filled
        by control paths of the program, shortest first.
        """
        sk = self.skeleton
        pinned: dict[int, str] = {}
        for name, vals in atoms:
            rel = sk.relations.get(name)
            if rel is None:
                continue
            for pos, loc in zip(vals, rel.locs):
                if pos < 0 or pinned.setdefault(pos, loc) != loc:
                    return
        if not pinned:
            return
        for path in enumerate_pinned_paths(sk.program, pinned, max(pinned) + slack):
            d = sk.derivation_of(path)
            if d is not None:
                yield d


@dataclass
class RunGrammar:
    system: CHCSystem
    provenance: SkeletonSystem
    program: Program

    @property
    def meta(self) -> GrammarMeta:
        return self.system.meta

    def derivation_of(self, path: ControlPath) -> Optional[Derivation]:
        return self.provenance.derivation_of(path)


def completion(sk: SkeletonSystem, constraints: Callable[[ClauseSkeleton], Formula],
               relation_terms: Optional[Callable[[Relation, Sequence[Term]], list]] = None,
               project: bool = True) -> CHCSystem:
    """Pair every clause skeleton with its constraint and compile to linear arithmetic."""
    cb = ConstraintBuilder(sk, project)
    rt = relation_terms or cb.rel_terms
    preds: dict[str, RelPred] = {}
    for name, rel in sk.relations.items():
        n = len(rt(rel, [cb.point(i) for i in range(rel.arity)]))
        preds[name] = RelPred(name, (INT,) * n)
    clauses = []
    compiled = []
    for c in sk.clauses:
        phi = simplify(constraints(c))
        head_t = rt(sk.relations[c.head], [cb.point(i) for i in c.head_args])
        body_t = rt(sk.relations[c.body], [cb.point(i) for i in c.body_args]) if c.body else []
        out, cong, meaning = ackermannize([phi] + head_t + body_t)
        phi_c = out[0]
        h_args = out[1:1 + len(head_t)]
        b_args = out[1 + len(head_t):]
        h_args, b_args, extra = _vars_only(h_args, b_args)
        constraint = simplify(And([phi_c] + cong + extra))
        body = (Application(preds[c.body], tuple(b_args)),) if c.body else ()
        cl = Clause(c.name, body, constraint, Application(preds[c.head], tuple(h_args)))
        clauses.append(cl)
        compiled.append(CompiledClause(cl, meaning))
    if sk.query not in preds:
        preds[sk.query] = RelPred(sk.query, (INT,))
    return CHCSystem(tuple(clauses), preds[sk.query], GrammarMeta(sk, compiled))


def _vars_only(h_args: list, b_args: list) -> tuple[list, list, list]:
    """Relation arguments must be variables; constants get a fresh variable and an equation."""
    extra = []
    out_h, out_b = [], []
    for side, args, out in (("h", h_args, out_h), ("b", b_args, out_b)):
        for k, a in enumerate(args):
            if a.op == "var":
                out.append(a)
            else:
                v = bound_var(f"arg.{side}{k}", INT)
                extra.append(Eq(v, a))
                out.append(v)
    return out_h, out_b, extra


def control_path_grammar(sk: SkeletonSystem) -> CHCSystem:
    """Completion with location and successor constraints only."""
    cb = ConstraintBuilder(sk)
    return completion(sk, cb.location_only, relation_terms=lambda rel, pts: list(pts))


def complete(sk: SkeletonSystem, project: bool = True) -> RunGrammar:
    """The run grammar of a skeleton; ``project`` drops dead variables from relation arguments."""
    cb = ConstraintBuilder(sk, project)
    return RunGrammar(completion(sk, cb.full, project=project), sk, sk.program)


# ---------------------------------------------------------------------------
# Synthesis


def syn_grammar(P: Program, F: Iterable[ControlPath], budget=None, timeout: float = 30.0,
                cmd: Optional[str] = None, deps_cache: Optional[dict] = None) -> RunGrammar:
    """A run grammar of ``P`` whose derivations of the paths in ``F`` are infeasible."""
    from .skeleton import syn_skeleton
    from .sympath import deps
    cache = deps_cache if deps_cache is not None else {}
    items = []
    for p in F:
        if p.labels not in cache:
            cache[p.labels] = deps(P, p, timeout, cmd, verify=False)
        items.append((p, cache[p.labels]))
    sk = syn_skeleton(P, items, budget, timeout=timeout, cmd=cmd)
    return complete(sk)


def refutes(G: RunGrammar, p: ControlPath, timeout: float = 30.0, cmd: Optional[str] = None) -> bool:
    d = G.derivation_of(p)
    if d is None:
        return False
    v = derivation_feasible(G.system, d, timeout, cmd)
    return isinstance(v, Unsat)


# ---------------------------------------------------------------------------
# Simulation


def run_model(P: Program, run: Run):
    """The vocabulary interpretation of a run: ``interp(decl, args)``."""
    path = run.path
    instrs = path.instructions(P)
    alloc_point = {}  # interpreter id -> node
    for n in range(1, len(run.states)):
        before, after = run.states[n - 1].alloc_count, run.states[n].alloc_count
        for k in range(before, after):
            alloc_point[k] = n
    last: dict = {}  # (object point, field) -> list of update nodes
    for n in range(1, len(run.states)):
        i = instrs[n - 1]
        s = run.states[n - 1]
        for part in basic_parts(i):
            if isinstance(part, STORES):
                o = alloc_point[s.obj_ctx[part.obj]]
                last.setdefault((o, part.field), []).append(n)
        if contains_alloc(i):
            for f in P.data_fields + P.obj_fields:
                last.setdefault((n, f), []).append(n)

    def obj(v):
        return -1 if v is None else alloc_point[v]

    def hist(f: str, n: int, o: int) -> int:
        best = UNALLOCATED
        for m in last.get((o, f), ()):
            if m <= n:
                best = m
        return best

    def interp(decl, args):
        name = decl.name
        if name.startswith("d_"):
            return run.states[args[0]].data_ctx[name[2:]]
        if name.startswith("o_"):
            return obj(run.states[args[0]].obj_ctx[name[2:]])
        if name.startswith("f_"):
            return hist(name[2:], args[0], args[1])
        raise KeyError(name)

    return interp


@dataclass
class SimulationReport:
    runs_checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def simulation_constraints(G: RunGrammar, run: Run) -> Optional[tuple[Derivation, list[Term]]]:
    """The clause chain a run's path determines, with every named term pinned to the run's value."""
    d = G.provenance.derive(run.path, partial=True)
    if not d:
        return None
    interp = run_model(G.program, run)
    extra = []
    nd = len(d)
    for leaf_idx, (k, local) in enumerate(d):
        depth = nd - 1 - leaf_idx
        cc = G.meta.compiled[k]
        env = {f"p{i}": node for i, node in enumerate(local)}
        for i, node in enumerate(local):
            extra.append(Eq(bound_var(f"p{i}@{depth}", INT), Int(node)))
        for nm, t in cc.meaning.items():
            extra.append(Eq(bound_var(f"{nm}@{depth}", INT), Int(evaluate(t, interp, env))))
    D = Derivation(tuple(k for k, _ in reversed(d)))
    return D, _restrict(extra, G.system, D)


def check_simulation(G: RunGrammar, depth: int = 12, trials: int = 50, timeout: float = 30.0,
                     cmd: Optional[str] = None, runs: Optional[Iterable[Run]] = None,
                     seed: int = 0) -> SimulationReport:
    """Every sampled run, read through its clause chain, satisfies the chain's constraints.

    Runs need not reach the error location: a run's path determines a chain
    of clauses from an initial clause up to some relation, and the run's
    model must satisfy that chain.
    """
    from .interp import random_runs
    rep = SimulationReport()
    if runs is None:
        runs = random_runs(G.program, depth, trials, seed, SIMULATION_DOMAIN)
    for run in runs:
        got = simulation_constraints(G, run)
        if got is None:
            rep.violations.append(f"no clause chain for {run.path}")
            continue
        D, extra = got
        v = derivation_feasible(G.system, D, timeout, cmd, extra=extra, rooted=False)
        rep.runs_checked += 1
        if not isinstance(v, Sat):
            rep.violations.append(f"run along {run.path} is not a model ({type(v).__name__})")
    return rep


def _restrict(extra: list, S: CHCSystem, D: Derivation) -> list:
    """Keep equalities whose variable occurs in the chain's formula."""
    names = set()
    for depth, k in enumerate(D.clauses):
        for v in S.clauses[k].variables():
            names.add(f"{v.value}@{depth}")
    return [e for e in extra if e.args[0].value in names]
