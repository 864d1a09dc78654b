"""Programs of the heap language, control paths, and the textual front end.

A program is a set of labeled instructions ``pre -> target`` over named
control locations.  Data variables hold integers (booleans are 0/1), object
variables hold object references or ``nil``.  Fields are split the same way.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Optional, Sequence, Union

Location = str


class IRError(Exception):
    """Raised for malformed programs."""

    def __init__(self, message: str, line: Optional[int] = None, col: Optional[int] = None):
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + message)


# ---------------------------------------------------------------------------
# Data expressions


@dataclass(frozen=True)
class Const:
    value: Union[int, bool]


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # '-' or '!'
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Const, Var, Unary, Binary]

ARITH_OPS = ("+", "-", "*")
CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("&&", "||")


def is_bool_expr(e: Expr) -> bool:
    if isinstance(e, Const):
        return isinstance(e.value, bool)
    if isinstance(e, Var):
        return False
    if isinstance(e, Unary):
        return e.op == "!"
    return e.op in CMP_OPS or e.op in BOOL_OPS


def expr_vars(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Unary):
        return expr_vars(e.arg)
    if isinstance(e, Binary):
        return expr_vars(e.left) | expr_vars(e.right)
    return set()


def eval_expr(e: Expr, env) -> Union[int, bool]:
    """Evaluate over a mapping of data variables to ints.

    Integers used as conditions are true when non-zero; booleans used as
    integers are 0/1.
    """
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Unary):
        v = eval_expr(e.arg, env)
        if e.op == "-":
            return -int(v)
        return not _truth(v)
    lhs = eval_expr(e.left, env)
    rhs = eval_expr(e.right, env)
    op = e.op
    if op == "&&":
        return _truth(lhs) and _truth(rhs)
    if op == "||":
        return _truth(lhs) or _truth(rhs)
    a, b = int(lhs), int(rhs)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    return {"==": a == b, "!=": a != b, "<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]


def _truth(v) -> bool:
    return bool(v) if isinstance(v, bool) else v != 0


_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4, "+": 5, "-": 5, "*": 6}


def format_expr(e: Expr) -> str:
    if isinstance(e, Const):
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        return f"{e.op}({format_expr(e.arg)})"
    return f"{_wrap(e.left)} {e.op} {_wrap(e.right)}"


def _wrap(e: Expr) -> str:
    s = format_expr(e)
    if isinstance(e, Binary):
        return f"({s})"
    return s


# ---------------------------------------------------------------------------
# Instructions


@dataclass(frozen=True)
class DataOp:
    """Assignment ``dst := expr``, ``assume(expr)`` or ``dst := havoc``."""

    kind: str  # 'assign' | 'assume' | 'havoc'
    dst: Optional[str] = None
    expr: Optional[Expr] = None


@dataclass(frozen=True)
class DataLoad:
    dst: str
    obj: str
    field: str


@dataclass(frozen=True)
class DataStore:
    obj: str
    field: str
    src: str


@dataclass(frozen=True)
class ObjLoad:
    dst: str
    obj: str
    field: str


@dataclass(frozen=True)
class ObjStore:
    obj: str
    field: str
    src: Optional[str]  # None stores nil


@dataclass(frozen=True)
class Alloc:
    dst: str


@dataclass(frozen=True)
class NilTest:
    dst: str
    obj: str


@dataclass(frozen=True)
class ObjEq:
    dst: str
    left: str
    right: str


@dataclass(frozen=True)
class ObjAssign:
    """Copy ``dst := src`` between object variables (``src=None`` is nil)."""

    dst: str
    src: Optional[str]


@dataclass(frozen=True)
class Composite:
    """A straight-line block produced by coalescing; executes ``parts`` in order."""

    parts: tuple


Instruction = Union[DataOp, DataLoad, DataStore, ObjLoad, ObjStore, Alloc, NilTest, ObjEq, ObjAssign, Composite]

HEAP_ACCESS = (DataLoad, DataStore, ObjLoad, ObjStore)
STORES = (DataStore, ObjStore)
LOADS = (DataLoad, ObjLoad)


def basic_parts(i: Instruction) -> tuple:
    return i.parts if isinstance(i, Composite) else (i,)


def reads(part) -> frozenset:
    """Variables a basic instruction reads."""
    if isinstance(part, DataOp):
        return frozenset(expr_vars(part.expr)) if part.expr is not None else frozenset()
    if isinstance(part, (DataLoad, ObjLoad, NilTest)):
        return frozenset({part.obj})
    if isinstance(part, (DataStore, ObjStore)):
        return frozenset({part.obj} | ({part.src} if part.src is not None else set()))
    if isinstance(part, ObjEq):
        return frozenset({part.left, part.right})
    if isinstance(part, ObjAssign):
        return frozenset({part.src} if part.src is not None else ())
    return frozenset()


def writes(part) -> frozenset:
    """Variables a basic instruction assigns."""
    return frozenset({part.dst}) if getattr(part, "dst", None) is not None else frozenset()


def contains_alloc(i: Instruction) -> bool:
    return any(isinstance(x, Alloc) for x in basic_parts(i))


def format_instr(i: Instruction) -> str:
    if isinstance(i, Composite):
        return "{ " + " ".join(format_instr(x) + ";" for x in i.parts) + " }"
    if isinstance(i, DataOp):
        if i.kind == "assume":
            return f"assume({format_expr(i.expr)})"
        if i.kind == "havoc":
            return f"{i.dst} := havoc"
        return f"{i.dst} := {format_expr(i.expr)}"
    if isinstance(i, (DataLoad, ObjLoad)):
        return f"{i.dst} := {i.obj}.{i.field}"
    if isinstance(i, (DataStore, ObjStore)):
        return f"{i.obj}.{i.field} := {i.src if i.src is not None else 'nil'}"
    if isinstance(i, Alloc):
        return f"{i.dst} := new"
    if isinstance(i, NilTest):
        return f"{i.dst} := isnil({i.obj})"
    if isinstance(i, ObjEq):
        return f"{i.dst} := {i.left} == {i.right}"
    if isinstance(i, ObjAssign):
        return f"{i.dst} := {i.src if i.src is not None else 'nil'}"
    raise TypeError(i)


@dataclass(frozen=True)
class LabeledInstruction:
    pre: Location
    instr: Instruction
    target: Location


# ---------------------------------------------------------------------------
# Programs


@dataclass(frozen=True)
class Program:
    instructions: tuple[LabeledInstruction, ...]
    l_init: Location
    l_error: Location
    data_vars: tuple[str, ...] = ()
    obj_vars: tuple[str, ...] = ()
    data_fields: tuple[str, ...] = ()
    obj_fields: tuple[str, ...] = ()
    name: str = field(default="program", compare=False)

    def __post_init__(self):
        seen = set()
        for li in self.instructions:
            key = (li.pre, li.target)
            if key in seen:
                raise IRError(f"duplicate instruction on edge {li.pre} -> {li.target}")
            seen.add(key)
        for li in self.instructions:
            if li.pre == self.l_error:
                raise IRError(f"error location {self.l_error} has an outgoing instruction")
            if li.target == self.l_init:
                raise IRError(f"initial location {self.l_init} has an incoming instruction")
        _check_names(self)

    @cached_property
    def locations(self) -> tuple[Location, ...]:
        out: dict[Location, None] = {self.l_init: None}
        for li in self.instructions:
            out.setdefault(li.pre)
            out.setdefault(li.target)
        out.setdefault(self.l_error)
        return tuple(out)

    @cached_property
    def loc_code(self) -> dict[Location, int]:
        return {l: k for k, l in enumerate(self.locations)}

    @cached_property
    def _edges(self) -> dict[tuple[Location, Location], Instruction]:
        return {(li.pre, li.target): li.instr for li in self.instructions}

    @cached_property
    def _succ(self) -> dict[Location, tuple[LabeledInstruction, ...]]:
        out: dict[Location, list] = {l: [] for l in self.locations}
        for li in self.instructions:
            out[li.pre].append(li)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def _pred(self) -> dict[Location, tuple[LabeledInstruction, ...]]:
        out: dict[Location, list] = {l: [] for l in self.locations}
        for li in self.instructions:
            out[li.target].append(li)
        return {k: tuple(v) for k, v in out.items()}

    def instr_at(self, pre: Location, target: Location) -> Optional[Instruction]:
        return self._edges.get((pre, target))

    def out_edges(self, loc: Location) -> tuple[LabeledInstruction, ...]:
        return self._succ.get(loc, ())

    def in_edges(self, loc: Location) -> tuple[LabeledInstruction, ...]:
        return self._pred.get(loc, ())

    @cached_property
    def live_variables(self) -> dict[Location, frozenset]:
        """Variables some path from each location reads before assigning them."""
        gen_kill = {}
        for li in self.instructions:
            used: set = set()
            killed: set = set()
            for part in basic_parts(li.instr):
                used |= reads(part) - killed
                killed |= writes(part)
            gen_kill[(li.pre, li.target)] = (frozenset(used), frozenset(killed))
        live = {l: frozenset() for l in self.locations}
        changed = True
        while changed:
            changed = False
            for li in self.instructions:
                used, killed = gen_kill[(li.pre, li.target)]
                new = live[li.pre] | used | (live[li.target] - killed)
                if new != live[li.pre]:
                    live[li.pre] = new
                    changed = True
        return live

    def field_is_data(self, f: str) -> bool:
        return f in self.data_fields

    @cached_property
    def cyclic_locations(self) -> frozenset:
        """Locations lying on some cycle of the control-flow graph."""
        return frozenset(l for comp in _sccs(self) for l in comp
                         if len(comp) > 1 or self.instr_at(l, l) is not None)

    @cached_property
    def reach(self) -> dict[Location, frozenset]:
        """Reflexive-transitive successor sets."""
        out = {}
        for l in self.locations:
            seen = {l}
            todo = [l]
            while todo:
                x = todo.pop()
                for li in self.out_edges(x):
                    if li.target not in seen:
                        seen.add(li.target)
                        todo.append(li.target)
            out[l] = frozenset(seen)
        return out


def _check_names(p: Program) -> None:
    groups = [p.data_vars, p.obj_vars, p.data_fields, p.obj_fields]
    names = [n for g in groups for n in g]
    if len(names) != len(set(names)):
        raise IRError("variable and field namespaces must be disjoint and names unique")
    dv, ov, df, of = (set(g) for g in groups)

    def need(cond, what):
        if not cond:
            raise IRError(f"undeclared or ill-typed identifier in {what}")

    def check(i, where):
        if isinstance(i, Composite):
            for x in i.parts:
                check(x, where)
        elif isinstance(i, DataOp):
            need(i.kind in ("assign", "assume", "havoc"), where)
            if i.kind != "assume":
                need(i.dst in dv, where)
            if i.expr is not None:
                need(expr_vars(i.expr) <= dv, where)
        elif isinstance(i, DataLoad):
            need(i.dst in dv and i.obj in ov and i.field in df, where)
        elif isinstance(i, DataStore):
            need(i.obj in ov and i.field in df and i.src in dv, where)
        elif isinstance(i, ObjLoad):
            need(i.dst in ov and i.obj in ov and i.field in of, where)
        elif isinstance(i, ObjStore):
            need(i.obj in ov and i.field in of and (i.src is None or i.src in ov), where)
        elif isinstance(i, Alloc):
            need(i.dst in ov, where)
        elif isinstance(i, NilTest):
            need(i.dst in dv and i.obj in ov, where)
        elif isinstance(i, ObjEq):
            need(i.dst in dv and i.left in ov and i.right in ov, where)
        elif isinstance(i, ObjAssign):
            need(i.dst in ov and (i.src is None or i.src in ov), where)
        else:
            raise IRError(f"unknown instruction {i!r}")

    for li in p.instructions:
        check(li.instr, f"{li.pre} -> {li.target}")


def _sccs(p: Program) -> list[list[Location]]:
    index: dict[Location, int] = {}
    low: dict[Location, int] = {}
    stack: list[Location] = []
    on: set = set()
    out: list[list[Location]] = []
    counter = [0]

    def visit(v):
        # iterative Tarjan
        work = [(v, iter(p.out_edges(v)))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for li in it:
                w = li.target
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on.add(w)
                    work.append((w, iter(p.out_edges(w))))
                    advanced = True
                    break
                if w in on:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                out.append(comp)

    for l in p.locations:
        if l not in index:
            visit(l)
    return out


# ---------------------------------------------------------------------------
# Control paths


@dataclass(frozen=True)
class ControlPath:
    """Nodes are the dense integers ``0..len(labels)-1`` in path order."""

    labels: tuple[Location, ...]

    @property
    def nodes(self) -> range:
        return range(len(self.labels))

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(k, k + 1) for k in range(len(self.labels) - 1)]

    def __len__(self) -> int:
        return len(self.labels) - 1

    def instructions(self, p: Program) -> list[Instruction]:
        out = []
        for a, b in zip(self.labels, self.labels[1:]):
            i = p.instr_at(a, b)
            if i is None:
                raise IRError(f"no instruction on edge {a} -> {b}")
            out.append(i)
        return out

    def is_path_of(self, p: Program) -> bool:
        return len(self.labels) >= 1 and all(p.instr_at(a, b) is not None
                                             for a, b in zip(self.labels, self.labels[1:]))

    def __str__(self) -> str:
        return " -> ".join(self.labels)


def enumerate_paths(p: Program, start: Location, end: Location, max_len: int) -> Iterator[ControlPath]:
    """Yield every control path from ``start`` to ``end`` with at most ``max_len`` edges.

    Paths come out shortest first; ties follow instruction order.
    """
    if max_len < 0:
        return
    dist = _distance_to(p, end)
    if start not in dist:
        return
    frontier: list[tuple[Location, ...]] = [(start,)]
    for length in range(max_len + 1):
        nxt = []
        for labels in frontier:
            if labels[-1] == end:
                yield ControlPath(labels)
            if length == max_len:
                continue
            for li in p.out_edges(labels[-1]):
                d = dist.get(li.target)
                if d is not None and length + 1 + d <= max_len:
                    nxt.append(labels + (li.target,))
        frontier = nxt
        if not frontier:
            return


def enumerate_pinned_paths(p: Program, pinned: dict[int, Location], max_len: int) -> Iterator[ControlPath]:
    """Control paths from the initial to the error location that visit
    ``pinned[i]`` at position ``i`` for every pinned position, shortest first."""
    last = max(pinned, default=0)
    dist = {loc: _distance_to(p, loc) for loc in set(pinned.values()) | {p.l_error}}

    def ok(labels: tuple) -> bool:
        # can the prefix still meet the next pin, and after the last one the error location?
        here, n = labels[-1], len(labels)
        j = min((i for i in pinned if i >= n), default=None)
        if j is None:
            return here in dist[p.l_error]
        d = dist[pinned[j]].get(here)
        return d is not None and d <= j - n + 1

    if pinned.get(0, p.l_init) != p.l_init:
        return
    frontier: list[tuple] = [(p.l_init,)]
    for length in range(max_len + 1):
        nxt = []
        for labels in frontier:
            if labels[-1] == p.l_error and length >= last:
                yield ControlPath(labels)
                continue
            for li in p.out_edges(labels[-1]):
                pos = length + 1
                if pos in pinned and pinned[pos] != li.target:
                    continue
                cand = labels + (li.target,)
                if ok(cand):
                    nxt.append(cand)
        frontier = nxt
        if not frontier:
            return


def _distance_to(p: Program, end: Location) -> dict[Location, int]:
    dist = {end: 0}
    q = deque([end])
    while q:
        x = q.popleft()
        for li in p.in_edges(x):
            if li.pre not in dist:
                dist[li.pre] = dist[x] + 1
                q.append(li.pre)
    return dist


# ---------------------------------------------------------------------------
# Coalescing and heap-target normalization

_MERGEABLE = (DataOp, Alloc, NilTest, ObjEq, ObjAssign, Composite)


def coalesce(p: Program) -> Program:
    """Merge straight-line chains of non-heap-access instructions.

    An interior location is eliminated when it has exactly one incoming and
    one outgoing instruction, both mergeable, and the merge does not create
    a duplicate edge, put two allocations in one block, or join two cyclic
    locations directly (an acyclic separator is kept between loops).
    """
    edges: dict[tuple[Location, Location], Instruction] = {(li.pre, li.target): li.instr for li in p.instructions}
    order = list(edges)
    cyclic = p.cyclic_locations
    changed = True
    while changed:
        changed = False
        for v in p.locations:
            if v in (p.l_init, p.l_error):
                continue
            ins = [k for k in order if k[1] == v]
            outs = [k for k in order if k[0] == v]
            if len(ins) != 1 or len(outs) != 1:
                continue
            (u, _), (_, w) = ins[0], outs[0]
            if u == v or w == v:
                continue
            i1, i2 = edges[ins[0]], edges[outs[0]]
            if not (isinstance(i1, _MERGEABLE) and isinstance(i2, _MERGEABLE)):
                continue
            if (u, w) in edges:
                continue
            if contains_alloc(i1) and contains_alloc(i2):
                continue
            if v not in cyclic and u in cyclic and w in cyclic:
                continue
            if (contains_alloc(i1) or contains_alloc(i2)) and len([k for k in order if k[1] == w]) > 1:
                continue
            merged = Composite(basic_parts(i1) + basic_parts(i2))
            pos = order.index(ins[0])
            order.remove(ins[0])
            order.remove(outs[0])
            del edges[ins[0]], edges[outs[0]]
            order.insert(pos, (u, w))
            edges[(u, w)] = merged
            changed = True
    instrs = tuple(LabeledInstruction(a, edges[(a, b)], b) for a, b in order)
    return _replace(p, instrs)


def normalize_heap_targets(p: Program) -> Program:
    """Give every store/alloc edge a target location with no other incoming edge.

    The symbolic encoding identifies heap updates by the point after the
    update, so that point's location must pin down the instruction.
    """
    counts: dict[Location, int] = {}
    for li in p.instructions:
        counts[li.target] = counts.get(li.target, 0) + 1
    used = set(p.locations)
    out = []
    for li in p.instructions:
        heap = isinstance(li.instr, STORES) or contains_alloc(li.instr)
        if heap and counts[li.target] > 1:
            fresh = _fresh(f"{li.pre}_{li.target}", used)
            out.append(LabeledInstruction(li.pre, li.instr, fresh))
            out.append(LabeledInstruction(fresh, DataOp("assume", None, Const(True)), li.target))
        else:
            out.append(li)
    return _replace(p, tuple(out))


def prepare(p: Program, do_coalesce: bool = True) -> Program:
    """The program form the verifier works on."""
    q = coalesce(p) if do_coalesce else p
    return normalize_heap_targets(q)


def _fresh(base: str, used: set) -> str:
    k = 0
    while f"{base}_{k}" in used:
        k += 1
    used.add(f"{base}_{k}")
    return f"{base}_{k}"


def _replace(p: Program, instrs: tuple) -> Program:
    return Program(instrs, p.l_init, p.l_error, p.data_vars, p.obj_vars, p.data_fields, p.obj_fields, p.name)


# ---------------------------------------------------------------------------
# Text format

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>:=|->|==|!=|<=|>=|&&|\|\||[:;,(){}.<>+\-*!])
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise IRError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line += 1
            col = 1
        else:
            if kind not in ("ws", "comment"):
                toks.append(_Tok(kind, s, line, col))
            col += len(s)
        pos = m.end()
    toks.append(_Tok("eof", "", line, col))
    return toks


@dataclass
class _Parser:
    toks: list
    pos: int = 0
    decls: dict = field(default_factory=dict)

    def peek(self, k: int = 0) -> _Tok:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.peek()
        self.pos += 1
        return t

    def error(self, msg: str, tok: Optional[_Tok] = None):
        tok = tok or self.peek()
        raise IRError(msg, tok.line, tok.col)

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text:
            self.error(f"expected {text!r}, found {t.text or 'end of input'!r}", t)
        return t

    def ident(self) -> _Tok:
        t = self.next()
        if t.kind != "ident":
            self.error(f"expected identifier, found {t.text or 'end of input'!r}", t)
        return t

    def kind_of(self, tok: _Tok) -> str:
        k = self.decls.get(tok.text)
        if k is None:
            self.error(f"undeclared identifier {tok.text!r}", tok)
        return k

    # expressions -----------------------------------------------------------

    def expr(self) -> Expr:
        return self._binary(1)

    def _binary(self, prec: int) -> Expr:
        if prec > 6:
            return self._unary()
        left = self._binary(prec + 1)
        while self.peek().kind == "op" and _PREC.get(self.peek().text) == prec:
            op = self.next().text
            right = self._binary(prec + 1)
            left = Binary(op, left, right)
        return left

    def _unary(self) -> Expr:
        t = self.peek()
        if t.text in ("-", "!"):
            self.next()
            if t.text == "-" and self.peek().kind == "num" and self.peek().line == t.line \
                    and self.peek().col == t.col + 1:
                return Const(-int(self.next().text))
            return Unary(t.text, self._unary())
        if t.text == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "num":
            self.next()
            return Const(int(t.text))
        if t.kind == "ident":
            self.next()
            if t.text == "true":
                return Const(True)
            if t.text == "false":
                return Const(False)
            if self.kind_of(t) != "datavar":
                self.error(f"{t.text!r} is not a data variable", t)
            return Var(t.text)
        self.error(f"unexpected {t.text or 'end of input'!r} in expression", t)

    # instructions ----------------------------------------------------------

    def instruction(self, allow_assert: bool):
        t = self.peek()
        if t.text == "{":
            self.next()
            parts = []
            while self.peek().text != "}":
                i = self.instruction(False)
                parts.append(i)
                self.expect(";")
            self.expect("}")
            if not parts:
                self.error("empty block", t)
            return Composite(tuple(parts))
        if t.text in ("assume", "assert") and self.peek(1).text == "(":
            self.next()
            self.expect("(")
            e = self.expr()
            self.expect(")")
            if t.text == "assert":
                if not allow_assert:
                    self.error("assert is not allowed inside a block", t)
                return ("assert", e)
            return DataOp("assume", None, e)
        lhs = self.ident()
        if self.peek().text == ".":
            self.next()
            f = self.ident()
            self.expect(":=")
            src = self.ident()
            if self.kind_of(lhs) != "objvar":
                self.error(f"{lhs.text!r} is not an object variable", lhs)
            fk = self.kind_of(f)
            if fk == "datafield":
                if self.kind_of(src) != "datavar":
                    self.error("data field store needs a data variable", src)
                return DataStore(lhs.text, f.text, src.text)
            if fk == "objfield":
                if src.text == "nil":
                    return ObjStore(lhs.text, f.text, None)
                if self.kind_of(src) != "objvar":
                    self.error("object field store needs an object variable", src)
                return ObjStore(lhs.text, f.text, src.text)
            self.error(f"{f.text!r} is not a field", f)
        self.expect(":=")
        dk = self.kind_of(lhs)
        nxt = self.peek()
        if dk == "objvar":
            r = self.ident()
            if r.text == "new":
                return Alloc(lhs.text)
            if r.text == "nil":
                return ObjAssign(lhs.text, None)
            if self.kind_of(r) != "objvar":
                self.error(f"{r.text!r} is not an object variable", r)
            if self.peek().text == ".":
                self.next()
                f = self.ident()
                if self.kind_of(f) != "objfield":
                    self.error(f"{f.text!r} is not an object field", f)
                return ObjLoad(lhs.text, r.text, f.text)
            return ObjAssign(lhs.text, r.text)
        if dk != "datavar":
            self.error(f"cannot assign to {lhs.text!r}", lhs)
        if nxt.text == "havoc":
            self.next()
            return DataOp("havoc", lhs.text)
        if nxt.text == "nondet" and self.peek(1).text == "(":
            self.next()
            self.expect("(")
            self.expect(")")
            return DataOp("havoc", lhs.text)
        if nxt.text == "isnil" and self.peek(1).text == "(":
            self.next()
            self.expect("(")
            o = self.ident()
            if self.kind_of(o) != "objvar":
                self.error(f"{o.text!r} is not an object variable", o)
            self.expect(")")
            return NilTest(lhs.text, o.text)
        if nxt.kind == "ident" and self.decls.get(nxt.text) == "objvar":
            o = self.next()
            if self.peek().text == ".":
                self.next()
                f = self.ident()
                if self.kind_of(f) != "datafield":
                    self.error(f"{f.text!r} is not a data field", f)
                return DataLoad(lhs.text, o.text, f.text)
            self.expect("==")
            o2 = self.ident()
            if self.kind_of(o2) != "objvar":
                self.error(f"{o2.text!r} is not an object variable", o2)
            return ObjEq(lhs.text, o.text, o2.text)
        return DataOp("assign", lhs.text, self.expr())


_DECL_KW = {"datavar": "datavar", "objvar": "objvar", "datafield": "datafield", "objfield": "objfield"}


def parse_program(text: str, name: str = "program") -> Program:
    """Parse the IR text format (see README)."""
    ps = _Parser(_tokenize(text))
    groups: dict[str, list[str]] = {k: [] for k in _DECL_KW}
    init = error = None
    raw: list[tuple[_Tok, object, _Tok]] = []
    while ps.peek().kind != "eof":
        t = ps.peek()
        if t.text in _DECL_KW and ps.peek(1).kind == "ident" and ps.peek(2).text in (",", ";"):
            ps.next()
            while True:
                n = ps.ident()
                if n.text in ps.decls or n.text in ("nil", "new", "havoc", "true", "false"):
                    ps.error(f"{n.text!r} declared twice or reserved", n)
                ps.decls[n.text] = _DECL_KW[t.text]
                groups[t.text].append(n.text)
                if ps.peek().text == ",":
                    ps.next()
                    continue
                break
            ps.expect(";")
            continue
        if t.text in ("init", "error") and ps.peek(1).kind == "ident" and ps.peek(2).text == ";":
            ps.next()
            loc = ps.ident()
            ps.expect(";")
            if t.text == "init":
                init = loc
            else:
                error = loc
            continue
        pre = ps.ident()
        ps.expect(":")
        instr = ps.instruction(True)
        ps.expect("->")
        tgt = ps.ident()
        ps.expect(";")
        raw.append((pre, instr, tgt))
    if init is None or error is None:
        raise IRError("program needs both 'init' and 'error' declarations")
    instrs: list[LabeledInstruction] = []
    seen: dict[tuple[str, str], _Tok] = {}

    def add(pre: str, i, tgt: str, tok: _Tok):
        if (pre, tgt) in seen:
            raise IRError(f"duplicate instruction on edge {pre} -> {tgt}", tok.line, tok.col)
        seen[(pre, tgt)] = tok
        instrs.append(LabeledInstruction(pre, i, tgt))

    for pre, i, tgt in raw:
        if isinstance(i, tuple):
            cond = i[1]
            add(pre.text, DataOp("assume", None, _negate(cond)), error.text, pre)
            add(pre.text, DataOp("assume", None, cond), tgt.text, pre)
        else:
            add(pre.text, i, tgt.text, pre)
    locs = {li.pre for li in instrs} | {li.target for li in instrs}
    for tok in (init, error):
        if tok.text not in locs and instrs:
            raise IRError(f"undeclared location {tok.text!r}", tok.line, tok.col)
    try:
        return Program(tuple(instrs), init.text, error.text, tuple(groups["datavar"]), tuple(groups["objvar"]),
                       tuple(groups["datafield"]), tuple(groups["objfield"]), name)
    except IRError as e:
        raise IRError(str(e), init.line, init.col) from None


def _negate(e: Expr) -> Expr:
    return Unary("!", e)


def load_program(path: str) -> Program:
    import os
    with open(path) as fh:
        text = fh.read()
    return parse_program(text, os.path.splitext(os.path.basename(path))[0])


def format_program(p: Program) -> str:
    """Print in the kernel text format; ``parse_program`` inverts it."""
    lines = []
    for kw, names in (("datavar", p.data_vars), ("objvar", p.obj_vars),
                      ("datafield", p.data_fields), ("objfield", p.obj_fields)):
        if names:
            lines.append(f"{kw} {', '.join(names)};")
    lines.append(f"init {p.l_init};")
    lines.append(f"error {p.l_error};")
    for li in p.instructions:
        lines.append(f"{li.pre}: {format_instr(li.instr)} -> {li.target};")
    return "\n".join(lines) + "\n"


def program_from_edges(edges: Sequence[tuple[Location, Instruction, Location]], l_init: Location,
                       l_error: Location, data_vars=(), obj_vars=(), data_fields=(), obj_fields=(),
                       name: str = "program") -> Program:
    return Program(tuple(LabeledInstruction(a, i, b) for a, i, b in edges), l_init, l_error,
                   tuple(data_vars), tuple(obj_vars), tuple(data_fields), tuple(obj_fields), name)
