"""Linear Constrained Horn Clause systems over integer arguments.

A clause is ``body(args) /\\ constraint => head(args)`` with at most one body
application.  A derivation of a linear system is a chain of clauses from
the query down to a clause with no body; it is listed root first.
"""

from __future__ import annotations

import logging
import os
import shlex
import time
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional, Sequence, Union

from .logic import Eq, Sat, Sort, Term, Unknown, Unsat, bound_var, substitute, subterms, to_smt
from .logic.smtlib import parse_value, symbol
from .logic.solver import ProtocolError, QueryStats, SmtSession, SolverVerdict, run_script

DEFAULT_CHC_CMD = "z3 -in -smt2"

log = logging.getLogger(__name__)


class MetadataMissing(Exception):
    """The system carries no skeleton provenance."""


@dataclass(frozen=True)
class RelPred:
    name: str
    sorts: tuple  # argument sorts

    @property
    def arity(self) -> int:
        return len(self.sorts)


@dataclass(frozen=True)
class Application:
    pred: RelPred
    args: tuple  # bound-variable Terms

    def __post_init__(self):
        if len(self.args) != self.pred.arity:
            raise ValueError(f"{self.pred.name} applied to {len(self.args)} arguments, arity {self.pred.arity}")
        for a, s in zip(self.args, self.pred.sorts):
            if a.sort != s:
                raise ValueError(f"{self.pred.name}: argument {a!r} has sort {a.sort}, expected {s}")


@dataclass(frozen=True)
class Clause:
    name: str
    body: tuple  # zero or one Application
    constraint: Term
    head: Application

    def __post_init__(self):
        if len(self.body) > 1:
            raise ValueError("only linear clauses are supported")

    def variables(self) -> list[Term]:
        """Bound variables in order of first occurrence: head, body, constraint."""
        out: dict[str, Term] = {}
        terms = list(self.head.args) + [a for b in self.body for a in b.args] + [self.constraint]
        for t in terms:
            for s in subterms(t):
                if s.op == "var":
                    prev = out.setdefault(s.value, s)
                    if prev.sort != s.sort:
                        raise ValueError(f"variable {s.value} used at two sorts in clause {self.name}")
        return list(out.values())


@dataclass(frozen=True)
class CHCSystem:
    clauses: tuple
    query: RelPred
    meta: Any = field(default=None, compare=False)  # skeleton provenance, if any

    def __post_init__(self):
        if not any(c.head.pred == self.query for c in self.clauses) and self.clauses:
            raise ValueError(f"query {self.query.name} is not the head of any clause")

    @property
    def preds(self) -> list[RelPred]:
        out: dict[str, RelPred] = {}
        for c in self.clauses:
            for a in (c.head,) + tuple(c.body):
                prev = out.setdefault(a.pred.name, a.pred)
                if prev != a.pred:
                    raise ValueError(f"relation {a.pred.name} used with two signatures")
        out.setdefault(self.query.name, self.query)
        return list(out.values())

    def clauses_with_head(self, name: str) -> list[int]:
        return [k for k, c in enumerate(self.clauses) if c.head.pred.name == name]


@dataclass(frozen=True)
class Derivation:
    """Clause indices, root (query head) first, ending at a clause without body."""

    clauses: tuple

    def __len__(self) -> int:
        return len(self.clauses)


# ---------------------------------------------------------------------------
# HORN emission


def emit_horn(S: CHCSystem) -> str:
    lines = ["(set-logic HORN)"]
    for p in S.preds:
        lines.append(f"(declare-fun {symbol(p.name)} ({' '.join(str(s) for s in p.sorts)}) Bool)")
    for c in S.clauses:
        lines.append(f"; {c.name}")
        lines.append(_rule([*c.body], c.constraint, _app(c.head), c.variables()))
    qv = [bound_var(f"q{k}", s) for k, s in enumerate(S.query.sorts)]
    lines.append("; query")
    lines.append(_rule([Application(S.query, tuple(qv))], None, "false", qv))
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def _app(a: Application) -> str:
    if not a.args:
        return symbol(a.pred.name)
    return f"({symbol(a.pred.name)} {' '.join(to_smt(x) for x in a.args)})"


def _rule(body: list, constraint: Optional[Term], head: str, variables: list[Term]) -> str:
    pre = [_app(b) for b in body]
    if constraint is not None and not constraint.is_true():
        pre.append(to_smt(constraint))
    if not pre:
        core = head
    else:
        lhs = pre[0] if len(pre) == 1 else f"(and {' '.join(pre)})"
        core = f"(=> {lhs} {head})"
    if not variables:
        return f"(assert {core})"
    bind = " ".join(f"({symbol(v.value)} {v.sort})" for v in variables)
    return f"(assert (forall ({bind}) {core}))"


def chc_command(cmd: Optional[str] = None) -> str:
    return cmd or os.environ.get("GRAMMATIC_CHC") or DEFAULT_CHC_CMD


# ---------------------------------------------------------------------------
# Derivations


def enumerate_derivations(S: CHCSystem, max_depth: int, limit: Optional[int] = None) -> Iterator[Derivation]:
    """Every derivation with at most ``max_depth`` clause applications.

    Shorter derivations come first; equal lengths follow clause order.
    """
    by_head: dict[str, list[int]] = {}
    for k, c in enumerate(S.clauses):
        by_head.setdefault(c.head.pred.name, []).append(k)
    # shortest completion length from each relation down to a fact
    dist: dict[str, int] = {}
    changed = True
    while changed:
        changed = False
        for c in S.clauses:
            d = 1 if not c.body else (dist.get(c.body[0].pred.name, 10 ** 9) + 1)
            if d < dist.get(c.head.pred.name, 10 ** 9):
                dist[c.head.pred.name] = d
                changed = True
    count = 0
    for depth in range(1, max_depth + 1):
        # depth-first over exact-length chains, in clause order
        out: list[Derivation] = []

        def go(rel: str, acc: tuple):
            used = len(acc)
            if used + dist.get(rel, 10 ** 9) > depth:
                return
            for k in by_head.get(rel, ()):
                c = S.clauses[k]
                if not c.body:
                    if used + 1 == depth:
                        out.append(Derivation(acc + (k,)))
                else:
                    go(c.body[0].pred.name, acc + (k,))

        go(S.query.name, ())
        for d in out:
            yield d
            count += 1
            if limit is not None and count >= limit:
                return


def derivation_formula(S: CHCSystem, D: Derivation, rooted: bool = True) -> tuple[list[Term], list[dict]]:
    """Per-node renamed constraints plus argument/parameter equalities.

    Returns the conjuncts and, per derivation node, the renaming of the
    clause's variables.  With ``rooted`` false the chain may end at any relation.
    """
    conj: list[Term] = []
    renames: list[dict] = []
    prev_body: Optional[tuple] = None
    for depth, k in enumerate(D.clauses):
        c = S.clauses[k]
        ren = {v: bound_var(f"{v.value}@{depth}", v.sort) for v in c.variables()}
        renames.append(ren)
        conj.append(substitute(c.constraint, ren))
        head_args = [substitute(a, ren) for a in c.head.args]
        if depth == 0:
            if rooted and c.head.pred != S.query:
                raise ValueError("derivation does not start at the query")
        else:
            if prev_body is None or prev_body[0] != c.head.pred:
                raise ValueError("derivation chain does not match clause bodies")
            conj += [Eq(a, b) for a, b in zip(prev_body[1], head_args)]
        prev_body = (c.body[0].pred, [substitute(a, ren) for a in c.body[0].args]) if c.body else None
    if prev_body is not None:
        raise ValueError("derivation does not end at a clause without body")
    return conj, renames


class _MacroCache:
    """Per-system ``define-fun`` texts of clause constraints, so that a
    derivation query names each clause instance instead of rewriting it."""

    def __init__(self, size: int = 4):
        self.size = size
        self.entries: list[tuple[CHCSystem, dict]] = []

    def get(self, S: CHCSystem) -> dict:
        for sys_, table in self.entries:
            if sys_ is S:
                return table
        table: dict = {}
        self.entries.append((S, table))
        del self.entries[:-self.size]
        return table


_MACROS = _MacroCache()


def _clause_macro(S: CHCSystem, k: int) -> tuple[str, list[Term], str]:
    table = _MACROS.get(S)
    if k not in table:
        c = S.clauses[k]
        params = c.variables()
        name = f"clause!{k}"
        sig = " ".join(f"({symbol(v.value)} {v.sort})" for v in params)
        table[k] = (name, params, f"(define-fun {symbol(name)} ({sig}) Bool {to_smt(c.constraint)})")
    return table[k]


def derivation_script(S: CHCSystem, D: Derivation, extra: Sequence[Term] = (), rooted: bool = True) -> str:
    """The QF_LIA query of a derivation: clause macros, renamed constants and chaining equalities."""
    defs: dict[int, str] = {}
    consts: dict[str, Sort] = {}
    body: list[str] = []
    prev_body: Optional[tuple] = None
    for depth, k in enumerate(D.clauses):
        c = S.clauses[k]
        name, params, text = _clause_macro(S, k)
        defs.setdefault(k, text)
        ren = {v: bound_var(f"{v.value}@{depth}", v.sort) for v in params}
        for v in ren.values():
            consts[v.value] = v.sort
        args = " ".join(symbol(v.value) for v in ren.values())
        body.append(f"(assert ({symbol(name)} {args}))" if params else f"(assert {symbol(name)})")
        head_args = [substitute(a, ren) for a in c.head.args]
        if depth == 0:
            if rooted and c.head.pred != S.query:
                raise ValueError("derivation does not start at the query")
        else:
            if prev_body is None or prev_body[0] != c.head.pred:
                raise ValueError("derivation chain does not match clause bodies")
            body += [f"(assert {to_smt(Eq(a, b))})" for a, b in zip(prev_body[1], head_args)]
        prev_body = (c.body[0].pred, [substitute(a, ren) for a in c.body[0].args]) if c.body else None
    if prev_body is not None:
        raise ValueError("derivation does not end at a clause without body")
    for t in extra:
        for s in subterms(t):
            if s.op == "var":
                consts.setdefault(s.value, s.sort)
        body.append(f"(assert {to_smt(t)})")
    lines = ["(set-option :produce-models true)", "(set-logic QF_LIA)"]
    lines += [f"(declare-fun {symbol(n)} () {s})" for n, s in consts.items()]
    lines += list(defs.values()) + body + ["(check-sat)"]
    return "\n".join(lines) + "\n"


def derivation_feasible(S: CHCSystem, D: Derivation, timeout: float = 30.0, cmd: Optional[str] = None,
                        extra: Sequence[Term] = (), query: Sequence[Term] = (), rooted: bool = True) -> SolverVerdict:
    """Satisfiability of the derivation's constraints (``extra`` over renamed variables).

    On Sat the model holds the values of the ``query`` terms, which are
    written over the renamed variables as well.
    """
    script = derivation_script(S, D, extra, rooted)
    t0 = time.perf_counter()
    try:
        with SmtSession(cmd, timeout) as s:
            s.send(script)
            reply = s.read_sexpr()
            if reply == "unsat":
                return Unsat()
            if reply != "sat":
                return Unknown(f"solver returned {reply!r}")
            model = {}
            if query:
                s.send("(get-value (" + " ".join(to_smt(t) for t in query) + "))\n")
                vals = s.read_sexpr()
                if not isinstance(vals, list) or len(vals) != len(query):
                    raise ProtocolError(f"bad get-value reply {vals!r}")
                model = {t: parse_value(pair[1]) for t, pair in zip(query, vals)}
            return Sat(model)
    except TimeoutError:
        return Unknown("timeout")
    finally:
        QueryStats.count += 1
        QueryStats.seconds += time.perf_counter() - t0


# ---------------------------------------------------------------------------
# Solving


@dataclass(frozen=True)
class Infeasible:
    """The query is unreachable: the solver found a solution of the system."""

    summary: str = ""


@dataclass(frozen=True)
class Feasible:
    witness: Optional[Derivation]
    raw: str = ""


@dataclass(frozen=True)
class SolveUnknown:
    reason: str


SolveResult = Union[Infeasible, Feasible, SolveUnknown]


def horn_check(S: CHCSystem, timeout: float, cmd: Optional[str] = None) -> str:
    """'unreachable', 'reachable' or 'unknown' from the external HORN solver."""
    return horn_query(S, timeout, cmd)[0]


def horn_query(S: CHCSystem, timeout: float, cmd: Optional[str] = None,
               proof: bool = False) -> tuple[str, list]:
    """Verdict plus, for a reachable query when ``proof`` is set, the ground relation instances of the refutation."""
    script = emit_horn(S)
    if proof:
        script = script.replace("(set-logic HORN)\n", "(set-logic HORN)\n(set-option :produce-proofs true)\n", 1)
        script += "(get-proof)\n"
    replies, timed_out = run_script(script, timeout, chc_command(cmd))
    if timed_out or not replies:
        return "unknown", []
    verdict = {"sat": "unreachable", "unsat": "reachable"}.get(replies[0], "unknown")
    atoms = ground_atoms(replies[1:], {p.name for p in S.preds}) if proof and verdict == "reachable" else []
    return verdict, atoms


def ground_atoms(sexprs: list, names: set) -> list[tuple[str, tuple]]:
    """Every application of a relation in ``names`` to integer literals, in first-seen order."""
    out, seen = [], set()
    todo = list(reversed(sexprs))
    while todo:
        x = todo.pop()
        if not isinstance(x, list) or not x:
            continue
        if isinstance(x[0], str) and x[0] in names:
            vals = [_int_literal(a) for a in x[1:]]
            if all(v is not None for v in vals):
                atom = (x[0], tuple(vals))
                if atom not in seen:
                    seen.add(atom)
                    out.append(atom)
                continue
        todo.extend(reversed(x))
    return out


def _int_literal(a) -> Optional[int]:
    if isinstance(a, str):
        return int(a) if a.isdigit() else None
    if isinstance(a, list) and len(a) == 2 and a[0] == "-" and isinstance(a[1], str) and a[1].isdigit():
        return -int(a[1])
    return None


def find_feasible_derivation(S: CHCSystem, max_depth: int, timeout: float = 30.0, cmd: Optional[str] = None,
                             limit: int = 2000) -> tuple[Optional[Derivation], bool]:
    """First feasible derivation up to ``max_depth``; the flag tells whether the search was exhaustive."""
    n = 0
    for d in enumerate_derivations(S, max_depth):
        n += 1
        if n > limit:
            return None, False
        v = derivation_feasible(S, d, timeout, cmd)
        if isinstance(v, Sat):
            return d, True
        if isinstance(v, Unknown):
            return None, False
    return None, True


def solve(S: CHCSystem, timeout: float = 60.0, cmd: Optional[str] = None, smt_cmd: Optional[str] = None,
          pre_depth: int = 8, depth_cap: int = 32, query_timeout: float = 30.0, pre_limit: int = 200) -> SolveResult:
    """Bounded derivation search first, then the external HORN solver.

    For a reachable query the solver is asked again for a refutation, and
    the derivation is read off it when the system's metadata can do so;
    otherwise the bounded search is deepened up to ``depth_cap``.
    """
    d, _ = find_feasible_derivation(S, pre_depth, query_timeout, smt_cmd, limit=pre_limit)
    if d is not None:
        return Feasible(d, "bounded search")
    from_atoms = getattr(S.meta, "derivations_from_atoms", None)
    start = time.monotonic()
    verdict, _ = horn_query(S, timeout, cmd)
    if verdict == "unreachable":
        return Infeasible(f"{len(S.preds)} relations, {len(S.clauses)} clauses")
    if verdict == "unknown":
        return SolveUnknown("HORN solver timeout or unknown")
    atoms = []
    if from_atoms is not None:
        # proof production slows the solver down, so it is only asked for once the query is known reachable
        _, atoms = horn_query(S, max(1.0, timeout - (time.monotonic() - start)), cmd, proof=True)
    if from_atoms is not None and atoms:
        for n, d in enumerate(from_atoms(S, atoms)):
            if n >= pre_limit:
                break
            if isinstance(derivation_feasible(S, d, query_timeout, smt_cmd), Sat):
                return Feasible(d, "solver refutation")
        log.debug("refutation with %d ground atoms gave no feasible derivation", len(atoms))
    depth = pre_depth
    while depth < depth_cap:
        depth = min(depth * 2, depth_cap)
        d, _ = find_feasible_derivation(S, depth, query_timeout, smt_cmd)
        if d is not None:
            return Feasible(d, "deepened search")
    return Feasible(None, "reachable per HORN solver; no derivation within the depth cap")


# ---------------------------------------------------------------------------
# Paths of derivations


def der_path(S: CHCSystem, D: Derivation):
    """The control path a derivation of a skeleton-generated system builds."""
    if S.meta is None or not hasattr(S.meta, "derivation_path"):
        raise MetadataMissing("system has no skeleton provenance")
    return S.meta.derivation_path(S, D)
