"""Quantifier-free EUFLIA terms.

Formulas are terms of sort Bool.  Terms are immutable, hashable and compare
structurally; the hash is computed once at construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union


@dataclass(frozen=True)
class Sort:
    name: str

    def __str__(self) -> str:
        return self.name


INT = Sort("Int")
BOOL = Sort("Bool")
POINT = Sort("Point")


def array_sort(index: Sort, elem: Sort) -> Sort:
    return Sort(f"(Array {index} {elem})")


@dataclass(frozen=True)
class FuncDecl:
    name: str
    domain: tuple
    range: Sort

    def __call__(self, *args: "Term") -> "Term":
        return app(self, *args)

    @property
    def arity(self) -> int:
        return len(self.domain)


# builtin operators and their result sorts (None = sort of first argument)
BUILTINS = {
    "and": BOOL, "or": BOOL, "not": BOOL, "=>": BOOL, "=": BOOL, "distinct": BOOL,
    "<=": BOOL, "<": BOOL, ">=": BOOL, ">": BOOL,
    "+": INT, "-": INT, "*": INT, "ite": None, "select": None, "store": None,
}


class Term:
    """A node: literal (``op='lit'``), declared-symbol application (``op='app'``),
    bound variable (``op='var'``) or builtin operator."""

    __slots__ = ("op", "args", "sort", "value", "_hash")

    def __init__(self, op: str, args: tuple, sort: Sort, value=None):
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "sort", sort)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "_hash", hash((op, args, sort, value)))

    def __setattr__(self, key, value):
        raise AttributeError("Term is immutable")

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Term) or self._hash != other._hash:
            return False
        return (self.op == other.op and self.sort == other.sort and self.value == other.value
                and self.args == other.args)

    def __repr__(self) -> str:
        from .smtlib import to_smt
        return f"Term({to_smt(self)})"

    def __reduce__(self):
        return (Term, (self.op, self.args, self.sort, self.value))

    @property
    def decl(self) -> Optional[FuncDecl]:
        return self.value if self.op == "app" else None

    def is_true(self) -> bool:
        return self.op == "lit" and self.value is True

    def is_false(self) -> bool:
        return self.op == "lit" and self.value is False


Formula = Term

TRUE = Term("lit", (), BOOL, True)
FALSE = Term("lit", (), BOOL, False)


def Int(v: int) -> Term:
    return Term("lit", (), INT, int(v))


def Bool(v: bool) -> Term:
    return TRUE if v else FALSE


def app(decl: FuncDecl, *args: Term) -> Term:
    if len(args) != len(decl.domain):
        raise TypeError(f"{decl.name} expects {len(decl.domain)} arguments, got {len(args)}")
    for a, s in zip(args, decl.domain):
        if a.sort != s:
            raise TypeError(f"{decl.name}: argument {a!r} has sort {a.sort}, expected {s}")
    return Term("app", tuple(args), decl.range, decl)


def const(name: str, sort: Sort) -> Term:
    return app(FuncDecl(name, (), sort))


def bound_var(name: str, sort: Sort) -> Term:
    return Term("var", (), sort, name)


def _b(op: str, args: Sequence[Term], sort: Sort) -> Term:
    return Term(op, tuple(args), sort)


def And(*args: Term) -> Term:
    args = _flat(args)
    if not args:
        return TRUE
    if len(args) == 1:
        return args[0]
    return _b("and", args, BOOL)


def Or(*args: Term) -> Term:
    args = _flat(args)
    if not args:
        return FALSE
    if len(args) == 1:
        return args[0]
    return _b("or", args, BOOL)


def _flat(args) -> list:
    out = []
    for a in args:
        if isinstance(a, (list, tuple)):
            out.extend(_flat(a))
        else:
            out.append(a)
    return out


def Not(a: Term) -> Term:
    return _b("not", (a,), BOOL)


def Implies(a: Term, b: Term) -> Term:
    return _b("=>", (a, b), BOOL)


def Eq(a: Term, b: Term) -> Term:
    if a.sort != b.sort:
        raise TypeError(f"sort mismatch in equality: {a!r} vs {b!r}")
    return _b("=", (a, b), BOOL)


def Neq(a: Term, b: Term) -> Term:
    return Not(Eq(a, b))


def Distinct(*args: Term) -> Term:
    args = _flat(args)
    if len(args) < 2:
        return TRUE
    return _b("distinct", args, BOOL)


def Ite(c: Term, a: Term, b: Term) -> Term:
    return _b("ite", (c, a, b), a.sort)


def Add(*args: Term) -> Term:
    args = _flat(args)
    if not args:
        return Int(0)
    if len(args) == 1:
        return args[0]
    return _b("+", args, INT)


def Sub(a: Term, b: Term) -> Term:
    return _b("-", (a, b), INT)


def Neg(a: Term) -> Term:
    if a.op == "lit":
        return Int(-a.value)
    return _b("-", (a,), INT)


def Mul(a: Term, b: Term) -> Term:
    return _b("*", (a, b), INT)


def Le(a: Term, b: Term) -> Term:
    return _b("<=", (a, b), BOOL)


def Lt(a: Term, b: Term) -> Term:
    return _b("<", (a, b), BOOL)


def Ge(a: Term, b: Term) -> Term:
    return _b(">=", (a, b), BOOL)


def Gt(a: Term, b: Term) -> Term:
    return _b(">", (a, b), BOOL)


def Select(arr: Term, idx: Term) -> Term:
    elem = arr.sort.name.rsplit(" ", 1)[1].rstrip(")")
    return _b("select", (arr, idx), Sort(elem))


def Store(arr: Term, idx: Term, val: Term) -> Term:
    return _b("store", (arr, idx, val), arr.sort)


def subterms(t: Term) -> Iterable[Term]:
    """Every subterm once, children before parents."""
    seen = set()
    stack = [(t, False)]
    while stack:
        x, done = stack.pop()
        if done:
            yield x
            continue
        if x in seen:
            continue
        seen.add(x)
        stack.append((x, True))
        for a in reversed(x.args):
            stack.append((a, False))


def decls_of(terms: Iterable[Term]) -> list[FuncDecl]:
    out: dict[str, FuncDecl] = {}
    for t in terms:
        for s in subterms(t):
            if s.op == "app":
                prev = out.setdefault(s.value.name, s.value)
                if prev != s.value:
                    raise TypeError(f"symbol {s.value.name} used with two signatures")
    return list(out.values())


def substitute(t: Term, mapping: dict) -> Term:
    """Replace subterms by ``mapping`` (applied top-down, outermost first)."""
    memo: dict[Term, Term] = {}

    def go(x: Term) -> Term:
        r = mapping.get(x)
        if r is not None:
            return r
        if not x.args:
            return x
        got = memo.get(x)
        if got is not None:
            return got
        new_args = tuple(go(a) for a in x.args)
        y = x if new_args == x.args else Term(x.op, new_args, x.sort, x.value)
        memo[x] = y
        return y

    return go(t)


Value = Union[int, bool, str, None]


def evaluate(t: Term, interp, env: Optional[dict] = None) -> Value:
    """Evaluate under ``interp(decl, args) -> value`` and bound-variable ``env``."""
    memo: dict[Term, Value] = {}

    def go(x: Term) -> Value:
        if x in memo:
            return memo[x]
        op = x.op
        if op == "lit":
            v = x.value
        elif op == "var":
            v = env[x.value]
        elif op == "app":
            v = interp(x.value, tuple(go(a) for a in x.args))
        elif op == "and":
            v = all(go(a) for a in x.args)
        elif op == "or":
            v = any(go(a) for a in x.args)
        elif op == "not":
            v = not go(x.args[0])
        elif op == "=>":
            v = (not go(x.args[0])) or go(x.args[1])
        elif op == "=":
            v = go(x.args[0]) == go(x.args[1])
        elif op == "distinct":
            vals = [go(a) for a in x.args]
            v = len(set(vals)) == len(vals)
        elif op == "ite":
            v = go(x.args[1]) if go(x.args[0]) else go(x.args[2])
        elif op == "+":
            v = sum(go(a) for a in x.args)
        elif op == "-":
            v = -go(x.args[0]) if len(x.args) == 1 else go(x.args[0]) - go(x.args[1])
        elif op == "*":
            v = go(x.args[0]) * go(x.args[1])
        elif op in ("<=", "<", ">=", ">"):
            a, b = go(x.args[0]), go(x.args[1])
            v = {"<=": a <= b, "<": a < b, ">=": a >= b, ">": a > b}[op]
        else:
            raise ValueError(f"cannot evaluate {op}")
        memo[x] = v
        return v

    return go(t)
