"""Array-theory encodings: a bounded path oracle and the location-per-relation baseline.

Objects are positive integers handed out by an allocation counter, ``nil``
is 0, and each field is an integer array indexed by object.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .ir import (Alloc, ControlPath, DataLoad, DataOp, DataStore, Instruction, NilTest, ObjAssign, ObjEq,
                 ObjLoad, ObjStore, Program, basic_parts)
from .logic import (INT, TRUE, Add, And, Eq, FuncDecl, Implies, Int, Ite, Not, Sat, Select, Sort, Store, Term,
                    Unsat, Vocabulary, array_sort, bound_var, counted_check_sat, to_smt)
from .logic.smtlib import symbol
from .logic.solver import run_script
from .sympath import Encoding, IndeterminateFeasibility

ARR = array_sort(INT, INT)
NIL = Int(0)


@dataclass
class ArrayState:
    data: dict
    obj: dict
    heap: dict
    next_id: Term


class _ArrayEncoder:
    def __init__(self, program: Program, make_var):
        self.P = program
        self.make_var = make_var  # (sort, name) -> Term
        self.enc = Encoding(program)  # only for expression translation

    def fresh_state(self, tag: str) -> ArrayState:
        P = self.P
        return ArrayState({x: self.make_var(INT, f"{x}{tag}") for x in P.data_vars},
                          {p: self.make_var(INT, f"{p}{tag}") for p in P.obj_vars},
                          {f: self.make_var(ARR, f"h_{f}{tag}") for f in P.data_fields + P.obj_fields},
                          self.make_var(INT, f"alloc{tag}"))

    def initial(self, s: ArrayState) -> Term:
        return And([Eq(v, Int(0)) for v in s.data.values()] + [Eq(v, NIL) for v in s.obj.values()]
                   + [Eq(s.next_id, Int(1))])

    def transition(self, i: Instruction, s: ArrayState, t: ArrayState, tag: str) -> Term:
        """Constraint from pre-state ``s`` to post-state ``t``."""
        conj = []
        data, obj, heap, nxt = dict(s.data), dict(s.obj), dict(s.heap), s.next_id
        for k, part in enumerate(basic_parts(i)):
            if isinstance(part, DataOp):
                if part.kind == "assume":
                    conj.append(self.enc.cond(part.expr, data))
                elif part.kind == "havoc":
                    data[part.dst] = self.make_var(INT, f"hv{tag}_{k}")
                else:
                    data[part.dst] = self.enc.expr(part.expr, data)
            elif isinstance(part, DataLoad):
                conj.append(Not(Eq(obj[part.obj], NIL)))
                data[part.dst] = Select(heap[part.field], obj[part.obj])
            elif isinstance(part, ObjLoad):
                conj.append(Not(Eq(obj[part.obj], NIL)))
                obj[part.dst] = Select(heap[part.field], obj[part.obj])
            elif isinstance(part, DataStore):
                conj.append(Not(Eq(obj[part.obj], NIL)))
                heap[part.field] = Store(heap[part.field], obj[part.obj], data[part.src])
            elif isinstance(part, ObjStore):
                conj.append(Not(Eq(obj[part.obj], NIL)))
                val = obj[part.src] if part.src is not None else NIL
                heap[part.field] = Store(heap[part.field], obj[part.obj], val)
            elif isinstance(part, Alloc):
                for f in heap:
                    heap[f] = Store(heap[f], nxt, Int(0))
                obj[part.dst] = nxt
                nxt = Add(nxt, Int(1))
            elif isinstance(part, NilTest):
                data[part.dst] = Ite(Eq(obj[part.obj], NIL), Int(1), Int(0))
            elif isinstance(part, ObjEq):
                data[part.dst] = Ite(Eq(obj[part.left], obj[part.right]), Int(1), Int(0))
            elif isinstance(part, ObjAssign):
                obj[part.dst] = obj[part.src] if part.src is not None else NIL
            else:
                raise TypeError(part)
        conj += [Eq(t.data[x], data[x]) for x in data]
        conj += [Eq(t.obj[p], obj[p]) for p in obj]
        conj += [Eq(t.heap[f], heap[f]) for f in heap]
        conj.append(Eq(t.next_id, nxt))
        return And(conj)


def array_path_oracle(P: Program, p: ControlPath, timeout: float = 30.0, cmd: Optional[str] = None) -> bool:
    """Feasibility of ``p`` by a step-indexed array encoding."""
    vocab = Vocabulary()

    def make_var(sort: Sort, name: str) -> Term:
        d = vocab.add(FuncDecl(name, (), sort))
        return d()

    ae = _ArrayEncoder(P, make_var)
    states = [ae.fresh_state(f"@{k}") for k in p.nodes]
    fs = []
    if p.labels[0] == P.l_init:
        fs.append(ae.initial(states[0]))
    for k, i in enumerate(p.instructions(P)):
        fs.append(ae.transition(i, states[k], states[k + 1], f"@{k}"))
    v = counted_check_sat(vocab, fs, timeout=timeout, cmd=cmd, logic="QF_AUFLIA")
    if isinstance(v, Sat):
        return True
    if isinstance(v, Unsat):
        return False
    raise IndeterminateFeasibility(v.reason)


# ---------------------------------------------------------------------------
# Baseline: one relation per control location


def baseline_script(P: Program) -> str:
    """HORN script with one relation per location over locals, counter and field arrays."""
    counter = [0]

    def make_var(sort: Sort, name: str) -> Term:
        counter[0] += 1
        return bound_var(name, sort)

    ae = _ArrayEncoder(P, make_var)
    sig = ([INT] * len(P.data_vars) + [INT] * len(P.obj_vars) + [ARR] * (len(P.data_fields) + len(P.obj_fields))
           + [INT])
    rels = {l: f"at_{l}" for l in P.locations}
    lines = ["(set-logic HORN)"]
    for l in P.locations:
        lines.append(f"(declare-fun {symbol(rels[l])} ({' '.join(str(s) for s in sig)}) Bool)")

    def args(s: ArrayState) -> list[Term]:
        return list(s.data.values()) + list(s.obj.values()) + list(s.heap.values()) + [s.next_id]

    def rule(body: Optional[tuple], constraint: Term, head: Optional[tuple]) -> str:
        vs = {}
        for t in ([constraint] + (body[1] if body else []) + (head[1] if head else [])):
            for x in _vars(t):
                vs[x.value] = x
        pre = [constraint] + ([_rel(body[0], body[1])] if body else [])
        concl = _rel(head[0], head[1]) if head else "false"
        bind = " ".join(f"({symbol(n)} {v.sort})" for n, v in vs.items())
        body_s = "(and " + " ".join(x if isinstance(x, str) else to_smt(x) for x in pre) + ")"
        core = f"(=> {body_s} {concl})"
        return f"(assert (forall ({bind}) {core}))" if bind else f"(assert {core})"

    s0 = ae.fresh_state("_0")
    lines.append(rule(None, ae.initial(s0), (rels[P.l_init], args(s0))))
    for li in P.instructions:
        s = ae.fresh_state("_0")
        t = ae.fresh_state("_1")
        lines.append(rule((rels[li.pre], args(s)), ae.transition(li.instr, s, t, "_0"), (rels[li.target], args(t))))
    s = ae.fresh_state("_0")
    lines.append(rule((rels[P.l_error], args(s)), TRUE, None))
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def _rel(name: str, args: list[Term]) -> str:
    if not args:
        return symbol(name)
    return f"({symbol(name)} {' '.join(to_smt(a) for a in args)})"


def _vars(t: Term):
    from .logic import subterms
    return [s for s in subterms(t) if s.op == "var"]


def baseline_solve(P: Program, timeout: float = 60.0, cmd: Optional[str] = None) -> str:
    """'safe', 'reachable' or 'unknown' from the external HORN solver."""
    from .chc import chc_command
    replies, timed_out = run_script(baseline_script(P), timeout, chc_command(cmd))
    if timed_out or not replies:
        return "unknown"
    return {"sat": "safe", "unsat": "reachable"}.get(replies[0], "unknown")
