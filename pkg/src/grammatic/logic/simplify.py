"""Local simplification: constant folding, flattening, trivial (in)equalities."""

from __future__ import annotations

from .terms import (BOOL, FALSE, INT, TRUE, Int, Term)


def simplify(t: Term) -> Term:
    memo: dict[Term, Term] = {}

    def go(x: Term) -> Term:
        if not x.args:
            return x
        got = memo.get(x)
        if got is not None:
            return got
        y = _rule(Term(x.op, tuple(go(a) for a in x.args), x.sort, x.value))
        memo[x] = y
        return y

    return go(t)


def _lit(t: Term) -> bool:
    return t.op == "lit"


def _rule(t: Term) -> Term:
    op, args = t.op, t.args
    if op == "and":
        out = []
        seen = set()
        for a in args:
            parts = a.args if a.op == "and" else (a,)
            for b in parts:
                if b.is_false():
                    return FALSE
                if b.is_true() or b in seen:
                    continue
                seen.add(b)
                out.append(b)
        if not out:
            return TRUE
        return out[0] if len(out) == 1 else Term("and", tuple(out), BOOL)
    if op == "or":
        out = []
        seen = set()
        for a in args:
            parts = a.args if a.op == "or" else (a,)
            for b in parts:
                if b.is_true():
                    return TRUE
                if b.is_false() or b in seen:
                    continue
                seen.add(b)
                out.append(b)
        if not out:
            return FALSE
        return out[0] if len(out) == 1 else Term("or", tuple(out), BOOL)
    if op == "not":
        a = args[0]
        if _lit(a):
            return TRUE if a.is_false() else FALSE
        if a.op == "not":
            return a.args[0]
        return t
    if op == "=>":
        a, b = args
        if a.is_false() or b.is_true():
            return TRUE
        if a.is_true():
            return b
        if b.is_false():
            return _rule(Term("not", (a,), BOOL))
        if a == b:
            return TRUE
        return t
    if op == "=":
        a, b = args
        if a == b:
            return TRUE
        if _lit(a) and _lit(b):
            return TRUE if a.value == b.value else FALSE
        if a.sort == BOOL:
            if a.is_true():
                return b
            if b.is_true():
                return a
        return t
    if op == "distinct":
        if len(set(args)) < len(args):
            return FALSE
        if all(_lit(a) for a in args):
            return TRUE
        return t
    if op == "ite":
        c, a, b = args
        if c.is_true():
            return a
        if c.is_false():
            return b
        if a == b:
            return a
        return t
    if op == "+":
        total = 0
        out = []
        for a in args:
            parts = a.args if a.op == "+" else (a,)
            for b in parts:
                if _lit(b):
                    total += b.value
                else:
                    out.append(b)
        if total != 0 or not out:
            out.append(Int(total))
        return out[0] if len(out) == 1 else Term("+", tuple(out), INT)
    if op == "-":
        if len(args) == 1:
            a = args[0]
            if _lit(a):
                return Int(-a.value)
            if a.op == "-" and len(a.args) == 1:
                return a.args[0]
            return t
        a, b = args
        if _lit(a) and _lit(b):
            return Int(a.value - b.value)
        if _lit(b) and b.value == 0:
            return a
        if a == b:
            return Int(0)
        return t
    if op == "*":
        a, b = args
        if _lit(a) and _lit(b):
            return Int(a.value * b.value)
        for x, y in ((a, b), (b, a)):
            if _lit(x) and x.value == 0:
                return Int(0)
            if _lit(x) and x.value == 1:
                return y
        return t
    if op in ("<=", "<", ">=", ">"):
        a, b = args
        if _lit(a) and _lit(b):
            v = {"<=": a.value <= b.value, "<": a.value < b.value,
                 ">=": a.value >= b.value, ">": a.value > b.value}[op]
            return TRUE if v else FALSE
        if a == b:
            return TRUE if op in ("<=", ">=") else FALSE
        return t
    return t
