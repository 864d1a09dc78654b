"""Clause skeletons: the control structure of a run grammar.

A skeleton derives a control path with a fixed number of *segments*, each
built left to right by a frontier point.  The first segment starts at the
initial location; further segments start at separator locations and leave
a gap before them that the preceding segment closes later.  Segments take
turns: the active one advances edge by edge until its frontier returns to
its synchronization location (a loop head), then the next open segment
moves.  This pairs the iterations of different loops.

Witness points (right after a store or an allocation) are kept as extra
parameters, *registers*, so a later load can see the update it reads.

Every clause builds exactly one control edge.  For each body relation the
clause is determined by the target location, so each path has at most one
derivation.  Relations are the reachable abstract states of this schedule.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

from .ir import (ControlPath, DataLoad, Location, ObjLoad, Program, STORES, contains_alloc, enumerate_paths)


class BudgetExhausted(Exception):
    def __init__(self, budget):
        self.budget = budget
        super().__init__(f"no skeleton within budget {budget}")


# ---------------------------------------------------------------------------
# Schedules


@dataclass(frozen=True)
class Split:
    at: Location  # separator where the new segment starts
    trigger: Location  # fires when the last segment's frontier reaches this location ...
    visits: int  # ... for this many times


@dataclass(frozen=True)
class Schedule:
    splits: tuple = ()
    registers: tuple = ()  # witness locations that get registers
    depth: int = 0  # registers kept per witness location

    def describe(self) -> str:
        sp = ", ".join(f"{s.at}@{s.trigger}x{s.visits}" for s in self.splits) or "none"
        rg = ", ".join(self.registers) or "none"
        return f"splits [{sp}], registers [{rg}] x{self.depth}"


@dataclass(frozen=True)
class Seg:
    start: Optional[Location]  # None for the first segment (its start is dropped)
    regs: tuple  # witness locations of register params, in path order
    front: Location
    sync: Optional[Location]


@dataclass(frozen=True)
class AState:
    segs: tuple
    active: int = 0
    started: int = 0
    visits: int = 0
    pending: bool = False

    def params(self) -> list[tuple]:
        """(kind, location, segment) per parameter in path order."""
        out = []
        for k, s in enumerate(self.segs):
            if s.start is not None:
                out.append(("start", s.start, k))
            out += [("reg", r, k) for r in s.regs]
            out.append(("front", s.front, k))
        return out


# ---------------------------------------------------------------------------
# Skeleton data


@dataclass(frozen=True)
class Relation:
    name: str
    locs: tuple  # parameter locations in path order
    kinds: tuple  # 'start' | 'reg' | 'front' per parameter
    pairs: tuple  # control pairs (i, j, sign): '+' built inside the subderivation, '-' a gap

    @property
    def arity(self) -> int:
        return len(self.locs)


@dataclass(frozen=True)
class ClauseSkeleton:
    """One control edge ``(ctrl_edge[0], ctrl_edge[1])`` over clause-local points.

    ``order`` lists all clause points in path order, ``loc_map`` gives each
    point's location.  ``body_args`` / ``head_args`` name the points bound to
    the body / head parameters.
    """

    name: str
    head: str
    body: Optional[str]
    body_args: tuple
    head_args: tuple
    loc_map: tuple
    order: tuple
    ctrl_edge: tuple
    action: str  # 'init' | 'extend' | 'close' | 'start'

    @property
    def points(self) -> range:
        return range(len(self.loc_map))


@dataclass
class SkeletonSystem:
    program: Program
    schedule: Schedule
    relations: dict  # name -> Relation
    clauses: list  # ClauseSkeleton
    query: str
    _states: dict = field(default_factory=dict, repr=False)  # name -> AState
    _table: dict = field(default_factory=dict, repr=False)  # (body name or None, key) -> clause index

    # derivation of a given path ---------------------------------------------

    def derive(self, path: ControlPath, partial: bool = False) -> Optional[list[tuple[int, tuple]]]:
        """The unique derivation of ``path``, leaf first, as (clause, points-to-nodes) pairs.

        With ``partial`` the path may end anywhere; the result is the longest
        chain of clauses that the path determines.
        """
        P = self.program
        labels = path.labels
        if len(labels) < 2 or labels[0] != P.l_init or (labels[-1] != P.l_error and not partial):
            return None
        k = self._table.get((None, labels[1]))
        if k is None:
            return None
        out = [(k, (0, 1))]
        nodes = [1]  # nodes of the current head's params
        state_name = self.clauses[k].head
        while state_name != self.query:
            st = self._states[state_name]
            params = st.params()
            if st.pending:
                sp = self.schedule.splits[st.started]
                last_front = nodes[-1]
                s = next((n for n in range(last_front + 1, len(labels)) if labels[n] == sp.at), None)
                if s is None or s + 1 >= len(labels):
                    return out if partial else None
                key = ("start", labels[s + 1])
                new_nodes = (s, s + 1)
            else:
                fi = _front_index(params, st.active)
                n = nodes[fi]
                if n + 1 >= len(labels):
                    return out if partial else None
                t = labels[n + 1]
                if fi + 1 < len(params) and params[fi + 1][0] == "start" and nodes[fi + 1] == n + 1:
                    key = ("close", t)
                    new_nodes = ()
                else:
                    key = ("extend", t)
                    new_nodes = (n + 1,)
            k = self._table.get((state_name, key))
            if k is None:
                return out if partial else None
            c = self.clauses[k]
            local = list(nodes) + list(new_nodes)
            if len(local) != len(c.loc_map) or any(labels[local[i]] != c.loc_map[i] for i in c.points):
                return out if partial else None
            out.append((k, tuple(local)))
            nodes = [local[i] for i in c.head_args]
            state_name = c.head
        return out

    def derivation_of(self, path: ControlPath):
        """The derivation of ``path`` as a CHC derivation (root first), or None."""
        from .chc import Derivation
        d = self.derive(path)
        if d is None:
            return None
        return Derivation(tuple(k for k, _ in reversed(d)))

    def derivation_path(self, S, D) -> ControlPath:
        """Stitch the control edges of a derivation into its path."""
        nodes: list[Location] = []
        nxt: dict[int, int] = {}
        params: list[int] = []
        for k in reversed(D.clauses):
            c = self.clauses[k]
            if c.body is None:
                local = []
            else:
                local = list(params)
            while len(local) < len(c.loc_map):
                nodes.append(c.loc_map[len(local)])
                local.append(len(nodes) - 1)
            a, b = local[c.ctrl_edge[0]], local[c.ctrl_edge[1]]
            if a in nxt:
                raise ValueError("derivation builds two edges out of one point")
            nxt[a] = b
            params = [local[i] for i in c.head_args]
        targets = set(nxt.values())
        starts = [n for n in range(len(nodes)) if n not in targets]
        if len(starts) != 1:
            raise ValueError("derivation does not build a single connected path")
        labels = [nodes[starts[0]]]
        cur = starts[0]
        while cur in nxt:
            cur = nxt[cur]
            labels.append(nodes[cur])
        if len(labels) != len(nodes):
            raise ValueError("derivation leaves unconnected points")
        return ControlPath(tuple(labels))

    # reporting ---------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "schedule": self.schedule.describe(),
            "query": self.query,
            "relations": [{"name": r.name, "locations": list(r.locs), "kinds": list(r.kinds),
                           "control_pairs": [list(p) for p in r.pairs]} for r in self.relations.values()],
            "clauses": [{"name": c.name, "head": c.head, "body": c.body, "action": c.action,
                         "body_args": list(c.body_args), "head_args": list(c.head_args),
                         "loc_map": list(c.loc_map), "ctrl_edge": list(c.ctrl_edge)} for c in self.clauses],
        }

    @property
    def max_arity(self) -> int:
        return max((r.arity for r in self.relations.values()), default=0)


def _front_index(params: list, seg: int) -> int:
    return next(i for i, p in enumerate(params) if p[0] == "front" and p[2] == seg)


# ---------------------------------------------------------------------------
# Building a skeleton from a schedule


def loop_heads(P: Program) -> list[Location]:
    cyc = P.cyclic_locations
    out = []
    for l in P.locations:
        if l in cyc and any(li.pre not in cyc or not _same_scc(P, li.pre, l) for li in P.in_edges(l)):
            out.append(l)
    return out


def _same_scc(P: Program, a: Location, b: Location) -> bool:
    return b in P.reach[a] and a in P.reach[b]


def first_loop_head(P: Program, start: Location, limit: Optional[Location] = None) -> Optional[Location]:
    """The first loop head met by breadth-first search from ``start`` (not beyond ``limit``)."""
    heads = set(loop_heads(P))
    seen = {start}
    q = deque([start])
    while q:
        x = q.popleft()
        if x in heads:
            return x
        if x == limit:
            continue
        for li in P.out_edges(x):
            if li.target not in seen:
                seen.add(li.target)
                q.append(li.target)
    return None


def witness_locations(P: Program) -> list[Location]:
    out = []
    for l in P.locations:
        ins = P.in_edges(l)
        if len(ins) == 1 and (isinstance(ins[0].instr, STORES) or contains_alloc(ins[0].instr)):
            out.append(l)
    return out


def split_is_valid(P: Program, sp: Split) -> bool:
    """The separator is acyclic, follows the trigger, and lies on every trigger-to-error path."""
    if sp.at in P.cyclic_locations or sp.at in (P.l_init, P.l_error):
        return False
    if sp.at not in P.reach[sp.trigger] or sp.trigger in P.reach[sp.at]:
        return False
    seen = {sp.trigger}
    todo = [sp.trigger]
    while todo:
        x = todo.pop()
        if x == P.l_error:
            return False
        for li in P.out_edges(x):
            if li.target != sp.at and li.target not in seen:
                seen.add(li.target)
                todo.append(li.target)
    return True


class _Builder:
    def __init__(self, P: Program, sched: Schedule, max_relations: int):
        self.P = P
        self.sched = sched
        self.max_relations = max_relations
        self.names: dict[AState, str] = {}
        self.states: dict[str, AState] = {}
        self.clauses: list[ClauseSkeleton] = []
        self.table: dict = {}
        self.todo: deque = deque()
        self.query = AState((Seg(None, (), P.l_error, None),), 0, len(sched.splits), 0, False)

    def name_of(self, st: AState) -> str:
        if st not in self.names:
            if st == self.query:
                name = "Query"
            else:
                name = f"R{len(self.names) - (1 if self.query in self.names else 0)}"
            self.names[st] = name
            self.states[name] = st
            if len(self.names) > self.max_relations:
                raise BudgetExhausted(self.max_relations)
            if st != self.query:
                self.todo.append(st)
        return self.names[st]

    def _gap_end(self, st: AState, k: int) -> Optional[Location]:
        return st.segs[k + 1].start if k + 1 < len(st.segs) else None

    def _edge_ok(self, st: AState, k: int, t: Location) -> bool:
        P = self.P
        g = self._gap_end(st, k)
        if g is None:
            return P.l_error in P.reach[t]
        return t == g or g in P.reach[t]

    def _push_reg(self, segs: list, k: int, loc: Location) -> list:
        if loc not in self.sched.registers or self.sched.depth <= 0:
            return segs
        segs[k] = replace(segs[k], regs=segs[k].regs + (loc,))
        # drop the oldest register of this location beyond the depth
        count = sum(s.regs.count(loc) for s in segs)
        if count > self.sched.depth:
            for j, s in enumerate(segs):
                if loc in s.regs:
                    i = s.regs.index(loc)
                    segs[j] = replace(s, regs=s.regs[:i] + s.regs[i + 1:])
                    break
        return segs

    def _advance(self, st: AState, segs: list, k: int, t: Location, started: int, visits: int,
                 stepped_front: Location) -> AState:
        """Bookkeeping after segment ``k``'s frontier moved to ``t``."""
        P = self.P
        sched = self.sched
        pending = False
        last = k == len(segs) - 1
        if last and started < len(sched.splits):
            sp = sched.splits[started]
            if t == sp.at:
                started, visits = started + 1, 0  # passed the separator before the trigger fired
            elif t == sp.trigger:
                visits += 1
                if visits == sp.visits:
                    pending = True
        active = k
        seg = segs[k]
        if t == P.l_error or (seg.sync is not None and t == seg.sync):
            active = self._next_active(segs, k)
        return self._normalize(AState(tuple(segs), active, started, visits if not pending else 0, pending))

    def _next_active(self, segs: Sequence[Seg], k: int) -> int:
        n = len(segs)
        for d in range(1, n + 1):
            j = (k + d) % n
            if segs[j].front != self.P.l_error:
                return j
        return k

    def _normalize(self, st: AState) -> AState:
        if len(st.segs) == 1 and st.segs[0].front == self.P.l_error:
            return self.query
        if st.segs[st.active].front == self.P.l_error and not st.pending:
            st = replace(st, active=self._next_active(st.segs, st.active))
        return st

    def build(self) -> SkeletonSystem:
        P = self.P
        sync0 = first_loop_head(P, P.l_init)
        for li in P.out_edges(P.l_init):
            t = li.target
            if P.l_error not in P.reach[t]:
                continue
            seg = Seg(None, (), t, sync0)
            head = self._advance(AState((seg,)), [seg], 0, t, 0, 0, P.l_init)
            self._emit(None, None, head, "init", (P.l_init, t), new_locs=(P.l_init, t), edge=(0, 1),
                       body_keep=(), order_new=None)
        while self.todo:
            st = self.todo.popleft()
            self._expand(st)
        rels = {}
        for st, name in self.names.items():
            rels[name] = _relation(name, st)
        sk = SkeletonSystem(P, self.sched, rels, self.clauses, "Query", dict(self.states), dict(self.table))
        return sk

    def _expand(self, st: AState) -> None:
        P = self.P
        body = self.names[st]
        params = st.params()
        if st.pending:
            sp = self.sched.splits[st.started]
            for li in P.out_edges(sp.at):
                t = li.target
                if P.l_error not in P.reach[t]:
                    continue
                segs = list(st.segs)
                sync = first_loop_head(P, sp.at)
                segs.append(Seg(sp.at, (), t, sync))
                k = len(segs) - 1
                head = self._advance(st, segs, k, t, st.started + 1, 0, sp.at)
                self._emit(st, body, head, ("start", t), None, new_locs=(sp.at, t),
                           edge=(len(params), len(params) + 1), body_keep=None, order_new="end")
            return
        k = st.active
        seg = st.segs[k]
        fi = _front_index(params, k)
        for li in P.out_edges(seg.front):
            t = li.target
            if not self._edge_ok(st, k, t):
                continue
            segs = list(st.segs)
            if t == self._gap_end(st, k):
                # the old frontier may stay as a register, then segment k absorbs k + 1
                segs = self._push_reg(segs, k, seg.front)
                cur, nxt = segs[k], segs[k + 1]
                segs[k:k + 2] = [Seg(cur.start, cur.regs + nxt.regs, nxt.front, nxt.sync)]
                active = k if nxt.front != P.l_error else self._next_active(segs, k)
                head = self._normalize(AState(tuple(segs), active, st.started, st.visits, False))
                self._emit(st, body, head, ("close", t), None, new_locs=(), edge=(fi, fi + 1),
                           body_keep=None, order_new=None)
            else:
                segs = self._push_reg(segs, k, seg.front)
                segs[k] = replace(segs[k], front=t)
                head = self._advance(st, segs, k, t, st.started, st.visits, seg.front)
                self._emit(st, body, head, ("extend", t), None, new_locs=(t,), edge=(fi, len(params)),
                           body_keep=None, order_new=fi)

    def _emit(self, st: Optional[AState], body: Optional[str], head: AState, key, _unused,
              new_locs: tuple, edge: tuple, body_keep, order_new) -> None:
        """Record a clause; head parameters are matched to body/new points by role."""
        hname = self.name_of(head)
        if st is None:
            body_params: list = []
            body_locs: list = []
        else:
            body_params = st.params()
            body_locs = [p[1] for p in body_params]
        loc_map = tuple(body_locs) + tuple(new_locs)
        # clause-local order: body params with new points inserted
        nb = len(body_locs)
        if st is None:
            order = tuple(range(len(new_locs)))
        elif order_new == "end":
            order = tuple(range(nb)) + tuple(range(nb, nb + len(new_locs)))
        elif order_new is None:
            order = tuple(range(nb))
        else:
            order = tuple(range(order_new + 1)) + (nb,) + tuple(range(order_new + 1, nb))
        head_args = self._match_head(st, head, order, loc_map, key, edge)
        c = ClauseSkeleton(name=f"{hname}[{len([x for x in self.clauses if x.head == hname])}]", head=hname,
                           body=body, body_args=tuple(range(nb)) if st is not None else (),
                           head_args=head_args, loc_map=loc_map, order=order, ctrl_edge=edge,
                           action="init" if st is None else key[0])
        tkey = (body, key if st is not None else new_locs[1])
        if tkey in self.table:
            raise AssertionError(f"ambiguous skeleton at {tkey}")
        self.table[tkey] = len(self.clauses)
        self.clauses.append(c)

    def _match_head(self, st, head: AState, order: tuple, loc_map: tuple, key, edge) -> tuple:
        """Bind each head parameter to a clause point.

        Points of the clause that survive, listed in path order, are exactly
        the head parameters in path order once dropped points are removed.
        """
        hp = head.params()
        # which clause points are dropped: compute survivors by role replay
        survivors = self._survivors(st, head, order, loc_map, key, edge)
        if len(survivors) != len(hp) or any(loc_map[s] != p[1] for s, p in zip(survivors, hp)):
            raise AssertionError("head parameters do not line up with clause points")
        return tuple(survivors)

    def _survivors(self, st, head: AState, order: tuple, loc_map: tuple, key, edge) -> list[int]:
        P = self.P
        if st is None:
            return [1]
        params = st.params()
        a, b = edge
        # role of each clause point after the step
        role: dict[int, tuple] = {i: (p[0], p[2]) for i, p in enumerate(params)}
        if key[0] == "start":
            role[a] = ("start", len(st.segs))
            role[b] = ("front", len(st.segs))
        elif key[0] == "close":
            role[b] = ("interior",)
            role[a] = ("reg",) if self._kept_as_reg(st, head, a, loc_map) else ("interior",)
        else:
            role[b] = ("front", params[a][2])
            role[a] = ("reg",) if self._kept_as_reg(st, head, a, loc_map) else ("interior",)
        if head == self.query:
            # only the final frontier survives
            return [i for i in order if role[i][0] == "front" and loc_map[i] == P.l_error][-1:]
        # registers that were evicted
        head_regs = [p for p in head.params() if p[0] == "reg"]
        cand = [i for i in order if role[i][0] in ("start", "front", "reg")]
        # evict oldest registers of a location until counts match the head
        need = {}
        for p in head_regs:
            need[p[1]] = need.get(p[1], 0) + 1
        have = {}
        for i in cand:
            if role[i][0] == "reg":
                have.setdefault(loc_map[i], []).append(i)
        drop = set()
        for loc, idxs in have.items():
            extra = len(idxs) - need.get(loc, 0)
            drop.update(idxs[:max(extra, 0)])
        return [i for i in cand if i not in drop]

    def _kept_as_reg(self, st, head: AState, a: int, loc_map: tuple) -> bool:
        return loc_map[a] in self.sched.registers and self.sched.depth > 0


def _relation(name: str, st: AState) -> Relation:
    params = st.params()
    pairs = []
    for i in range(len(params) - 1):
        a, b = params[i], params[i + 1]
        sign = "-" if a[0] == "front" and b[0] == "start" else "+"
        pairs.append((i, i + 1, sign))
    return Relation(name, tuple(p[1] for p in params), tuple(p[0] for p in params), tuple(pairs))


def build_skeleton(P: Program, sched: Schedule, max_relations: int = 400) -> SkeletonSystem:
    for sp in sched.splits:
        if not split_is_valid(P, sp):
            raise ValueError(f"invalid split {sp}")
    return _Builder(P, sched, max_relations).build()


# ---------------------------------------------------------------------------
# Realization and checking


def witness_pairs(P: Program, path: ControlPath, nu) -> list[tuple[int, int]]:
    """Pairs (load target, witness point) of ``nu`` that a load may read from."""
    instrs = path.instructions(P)
    out = []
    for n, m in nu.pairs():
        if n == 0 or m == 0:
            continue
        i = instrs[n - 1]
        if not isinstance(i, (DataLoad, ObjLoad)):
            continue
        w = instrs[m - 1]
        if isinstance(w, STORES) and w.field == i.field:
            out.append((n, m))
        elif contains_alloc(w):
            out.append((n, m))
    return out


def realizes(sk: SkeletonSystem, path: ControlPath, nu) -> tuple[bool, list]:
    """Whether each witness pair of ``nu`` meets in the clause building the load edge."""
    d = sk.derive(path)
    if d is None:
        return False, [("underivable", None)]
    edge_clause = {}
    for k, local in d:
        c = sk.clauses[k]
        a, b = c.ctrl_edge
        edge_clause[local[b]] = set(local)
    missing = [(n, m) for n, m in witness_pairs(sk.program, path, nu) if m not in edge_clause.get(n, ())]
    return not missing, missing


@dataclass
class SkeletonReport:
    violations: list = field(default_factory=list)
    paths_checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def check_skeleton(P: Program, sk: SkeletonSystem, F: Iterable = (), depth: int = 10,
                   path_limit: int = 5000) -> SkeletonReport:
    """Independent validation of structure, completeness, unambiguity and realization."""
    from .chc import enumerate_derivations
    rep = SkeletonReport()
    v = rep.violations
    # (a) structural consistency
    heads_by_body: dict = {}
    for c in sk.clauses:
        a, b = c.ctrl_edge
        if P.instr_at(c.loc_map[a], c.loc_map[b]) is None:
            v.append(f"{c.name}: no instruction on {c.loc_map[a]} -> {c.loc_map[b]}")
        if c.order.index(b) != c.order.index(a) + 1:
            v.append(f"{c.name}: control edge endpoints are not adjacent in path order")
        if c.body is not None:
            br = sk.relations[c.body]
            if tuple(c.loc_map[i] for i in c.body_args) != br.locs:
                v.append(f"{c.name}: body arguments disagree with relation locations")
            order_pos = {p: i for i, p in enumerate(c.order)}
            if [order_pos[i] for i in c.body_args] != sorted(order_pos[i] for i in c.body_args):
                v.append(f"{c.name}: body parameters out of path order")
        hr = sk.relations[c.head]
        if tuple(c.loc_map[i] for i in c.head_args) != hr.locs:
            v.append(f"{c.name}: head arguments disagree with relation locations")
        order_pos = {p: i for i, p in enumerate(c.order)}
        if [order_pos[i] for i in c.head_args] != sorted(order_pos[i] for i in c.head_args):
            v.append(f"{c.name}: head parameters out of path order")
        key = (c.body, c.loc_map[b], c.action)
        if key in heads_by_body:
            v.append(f"{c.name}: ambiguous with {heads_by_body[key]} (same body and target location)")
        heads_by_body[key] = c.name
    if not any(c.head == sk.query for c in sk.clauses):
        v.append("query relation has no clause")
    # (b, c) completeness and unambiguity on short paths, against the control-path grammar
    from .grammar import control_path_grammar
    S = control_path_grammar(sk)
    counts: dict = {}
    for d in enumerate_derivations(S, depth, limit=path_limit):
        try:
            p = sk.derivation_path(S, d)
        except ValueError as e:
            v.append(f"derivation {d.clauses} does not stitch: {e}")
            continue
        if not p.is_path_of(P) or p.labels[0] != P.l_init or p.labels[-1] != P.l_error:
            v.append(f"derivation {d.clauses} yields a non-path {p}")
        counts[p.labels] = counts.get(p.labels, 0) + 1
    for p in enumerate_paths(P, P.l_init, P.l_error, depth):
        rep.paths_checked += 1
        if rep.paths_checked > path_limit:
            break
        c = counts.get(p.labels, 0)
        if c == 0:
            v.append(f"path not derivable: {p}")
        elif c > 1:
            v.append(f"path has {c} derivations: {p}")
        d = sk.derivation_of(p)
        if d is None:
            v.append(f"path simulation failed: {p}")
    # (d) realization
    for item in F:
        p, nu = item
        ok, missing = realizes(sk, p, nu)
        if not ok:
            v.append(f"neighborhood not realized on {p}: {missing}")
    return rep


# ---------------------------------------------------------------------------
# Synthesis


@dataclass(frozen=True)
class Budget:
    max_relations: int  # abstract states a skeleton may have
    arity: int  # points a relation may carry

    def __str__(self) -> str:
        return f"{self.max_relations} relations, arity {self.arity}"


BUDGET_SCHEDULE = (Budget(80, 3), Budget(300, 5), Budget(1200, 7))


def candidate_schedules(P: Program, registers: Sequence[Location], max_depth: int = 3,
                        max_splits: int = 2) -> list[Schedule]:
    """Schedules in search order: fewer registers, then fewer splits, then earlier triggers."""
    regs = tuple(sorted(set(registers)))
    splits = [Split(at, trig, v) for at in P.locations for trig in loop_heads(P) for v in (1, 2)
              if split_is_valid(P, Split(at, trig, v))]
    combos: list[tuple] = [()]
    combos += [(s,) for s in splits]
    if max_splits >= 2:
        combos += [(a, b) for a in splits for b in splits
                   if b.at != a.at and a.at not in P.reach[b.at] and a.trigger in P.reach[b.trigger]]
    out = []
    for depth in range(0, max_depth + 1):
        for sp in combos:
            out.append(Schedule(sp, regs if depth else (), depth))
    out.sort(key=lambda s: (s.depth, len(s.splits), sum(x.visits for x in s.splits)))
    return out


def syn_skeleton(P: Program, items: Sequence[tuple], budget: Optional[Budget] = None, timeout: float = 30.0,
                 cmd: Optional[str] = None, candidates: Optional[Sequence[Schedule]] = None,
                 log=None) -> SkeletonSystem:
    """The first schedule within ``budget`` that realizes and refutes every (path, neighborhood).

    Raises BudgetExhausted when no candidate fits.
    """
    from .chc import derivation_feasible
    from .grammar import complete
    from .logic import Unsat
    budget = budget or BUDGET_SCHEDULE[-1]
    regs = sorted({p.labels[m]
                   for p, nu in items for _, m in witness_pairs(P, p, nu)})
    for sched in candidates if candidates is not None else candidate_schedules(P, regs):
        try:
            sk = build_skeleton(P, sched, max_relations=budget.max_relations)
        except BudgetExhausted:
            continue
        if sk.max_arity > budget.arity:
            continue
        if not all(realizes(sk, p, nu)[0] for p, nu in items):
            continue
        G = complete(sk)
        refuted = True
        for p, _ in items:
            d = sk.derivation_of(p)
            if d is None or not isinstance(derivation_feasible(G.system, d, timeout, cmd), Unsat):
                refuted = False
                break
        if log:
            log(f"schedule {sched.describe()}: {'accepted' if refuted else 'rejected'}")
        if refuted:
            return sk
    raise BudgetExhausted(budget)
