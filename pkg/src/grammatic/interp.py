"""Concrete semantics of the heap language and a brute-force run finder."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional, Sequence, Union

from .ir import (Alloc, Composite, ControlPath, DataLoad, DataOp, DataStore, Instruction, NilTest, ObjAssign,
                 ObjEq, ObjLoad, ObjStore, Program, basic_parts, eval_expr)

DEFAULT_DOMAIN = tuple(range(-2, 4))


class Stuck(Exception):
    """The instruction has no successor state (failed assume, nil access)."""


class NeedsChoice(Exception):
    """A havoc ran out of supplied values."""


@dataclass(frozen=True)
class ConcreteState:
    data_ctx: dict
    obj_ctx: dict  # obj var -> object id or None
    data_heap: dict = field(default_factory=dict)  # (obj, field) -> int
    obj_heap: dict = field(default_factory=dict)  # (obj, field) -> object id or None
    alloc_count: int = 0

    def snapshot(self) -> dict:
        return {
            "data": dict(self.data_ctx),
            "obj": dict(self.obj_ctx),
            "data_heap": {f"{o}.{f}": v for (o, f), v in sorted(self.data_heap.items())},
            "obj_heap": {f"{o}.{f}": v for (o, f), v in sorted(self.obj_heap.items())},
            "alloc_count": self.alloc_count,
        }


def initial_state(p: Program) -> ConcreteState:
    return ConcreteState({x: 0 for x in p.data_vars}, {v: None for v in p.obj_vars})


def _as_int(v) -> int:
    return int(v)


def step(p: Program, s: ConcreteState, i: Instruction, choice: Optional[list] = None) -> ConcreteState:
    """Post-state of ``i`` from ``s``.

    ``choice`` is consumed from the front by havocs.  Raises ``Stuck`` or
    ``NeedsChoice``.
    """
    for part in basic_parts(i):
        s = _step1(p, s, part, choice)
    return s


def _step1(p: Program, s: ConcreteState, i: Instruction, choice) -> ConcreteState:
    if isinstance(i, DataOp):
        if i.kind == "assume":
            v = eval_expr(i.expr, s.data_ctx)
            if not (v if isinstance(v, bool) else v != 0):
                raise Stuck("assume")
            return s
        if i.kind == "havoc":
            if not choice:
                raise NeedsChoice(i.dst)
            return replace(s, data_ctx={**s.data_ctx, i.dst: choice.pop(0)})
        return replace(s, data_ctx={**s.data_ctx, i.dst: _as_int(eval_expr(i.expr, s.data_ctx))})
    if isinstance(i, DataLoad):
        o = _deref(s, i.obj)
        return replace(s, data_ctx={**s.data_ctx, i.dst: s.data_heap[(o, i.field)]})
    if isinstance(i, DataStore):
        o = _deref(s, i.obj)
        return replace(s, data_heap={**s.data_heap, (o, i.field): s.data_ctx[i.src]})
    if isinstance(i, ObjLoad):
        o = _deref(s, i.obj)
        return replace(s, obj_ctx={**s.obj_ctx, i.dst: s.obj_heap[(o, i.field)]})
    if isinstance(i, ObjStore):
        o = _deref(s, i.obj)
        val = s.obj_ctx[i.src] if i.src is not None else None
        return replace(s, obj_heap={**s.obj_heap, (o, i.field): val})
    if isinstance(i, Alloc):
        o = s.alloc_count
        dh = dict(s.data_heap)
        oh = dict(s.obj_heap)
        for f in p.data_fields:
            dh[(o, f)] = 0
        for g in p.obj_fields:
            oh[(o, g)] = None
        return ConcreteState(s.data_ctx, {**s.obj_ctx, i.dst: o}, dh, oh, o + 1)
    if isinstance(i, NilTest):
        return replace(s, data_ctx={**s.data_ctx, i.dst: int(s.obj_ctx[i.obj] is None)})
    if isinstance(i, ObjEq):
        return replace(s, data_ctx={**s.data_ctx, i.dst: int(s.obj_ctx[i.left] == s.obj_ctx[i.right])})
    if isinstance(i, ObjAssign):
        return replace(s, obj_ctx={**s.obj_ctx, i.dst: s.obj_ctx[i.src] if i.src is not None else None})
    raise TypeError(i)


def _deref(s: ConcreteState, var: str):
    o = s.obj_ctx[var]
    if o is None:
        raise Stuck(f"nil dereference of {var}")
    return o


def havoc_count(i: Instruction) -> int:
    return sum(1 for x in basic_parts(i) if isinstance(x, DataOp) and x.kind == "havoc")


@dataclass(frozen=True)
class Run:
    path: ControlPath
    states: tuple  # ConcreteState per node
    choices: tuple = ()  # havoc values per edge

    def to_json(self, p: Program) -> list:
        out = []
        prev = None
        for n, (loc, st) in enumerate(zip(self.path.labels, self.states)):
            snap = st.snapshot()
            if prev is None:
                diff = snap
            else:
                diff = {k: {kk: vv for kk, vv in v.items() if prev[k].get(kk, "<unset>") != vv}
                        if isinstance(v, dict) else v for k, v in snap.items() if v != prev[k]}
            out.append({"node": n, "location": loc, "state": diff})
            prev = snap
        return out


def find_run(p: Program, path: ControlPath, value_domain: Iterable[int] = DEFAULT_DOMAIN,
             initial: Optional[ConcreteState] = None) -> Optional[Run]:
    """Depth-first search over havoc values; returns a checked run or None."""
    dom = tuple(value_domain)
    instrs = path.instructions(p)
    s0 = initial or initial_state(p)

    def go(k: int, s: ConcreteState, acc: list, chosen: list) -> Optional[Run]:
        if k == len(instrs):
            return Run(path, tuple(acc), tuple(chosen))
        i = instrs[k]
        need = havoc_count(i)
        for vals in itertools.product(dom, repeat=need):
            try:
                t = step(p, s, i, list(vals))
            except Stuck:
                continue
            r = go(k + 1, t, acc + [t], chosen + [tuple(vals)])
            if r is not None:
                return r
        return None

    r = go(0, s0, [s0], [])
    if r is not None:
        assert check_run(p, r), "find_run produced an invalid run"
    return r


def check_run(p: Program, r: Run) -> bool:
    """Every adjacent state pair is related by the edge's transition relation."""
    if len(r.states) != len(r.path.labels) or not r.path.is_path_of(p):
        return False
    for k, i in enumerate(r.path.instructions(p)):
        if not _related(p, r.states[k], i, r.states[k + 1]):
            return False
    return True


def _related(p: Program, s: ConcreteState, i: Instruction, t: ConcreteState) -> bool:
    parts = basic_parts(i)
    havocs = [x.dst for x in parts if isinstance(x, DataOp) and x.kind == "havoc"]
    if not havocs:
        try:
            return step(p, s, i, []) == t
        except (Stuck, NeedsChoice):
            return False
    # replay with the values the post-state forces; a later overwrite makes
    # the havoc value irrelevant, so try the final value and then a sweep
    cands = {t.data_ctx.get(h) for h in havocs} | set(DEFAULT_DOMAIN) | set(t.data_ctx.values())
    for vals in itertools.product(sorted(cands), repeat=len(havocs)):
        try:
            if step(p, s, i, list(vals)) == t:
                return True
        except (Stuck, NeedsChoice):
            continue
    return False


def iter_runs(p: Program, paths: Iterable[ControlPath], value_domain: Sequence[int] = DEFAULT_DOMAIN
              ) -> Iterator[Run]:
    for path in paths:
        r = find_run(p, path, value_domain)
        if r is not None:
            yield r


def random_runs(p: Program, max_len: int, count: int, seed: int = 0, value_domain: Sequence[int] = DEFAULT_DOMAIN,
                attempts: int = 50) -> list[Run]:
    """Distinct random walks from the initial state of up to ``max_len`` edges.

    Each walk picks uniformly among enabled edges and havoc values, and stops
    at a location without enabled edges or at the length bound.
    """
    rng = random.Random(seed)
    dom = tuple(value_domain)
    seen: set = set()
    out: list[Run] = []
    for _ in range(count * attempts):
        if len(out) >= count:
            break
        limit = rng.randint(1, max_len)
        loc, s = p.l_init, initial_state(p)
        labels, states, choices = [loc], [s], []
        while len(labels) <= limit:
            options = []
            for li in p.out_edges(loc):
                ch = [rng.choice(dom) for _ in range(havoc_count(li.instr))]
                try:
                    options.append((li, step(p, s, li.instr, list(ch)), tuple(ch)))
                except Stuck:
                    pass
            if not options:
                break
            li, s, ch = rng.choice(options)
            loc = li.target
            labels.append(loc)
            states.append(s)
            choices.append(ch)
        key = (tuple(labels), tuple(choices))
        if len(labels) < 2 or key in seen:
            continue
        seen.add(key)
        out.append(Run(ControlPath(tuple(labels)), tuple(states), tuple(choices)))
    return out
