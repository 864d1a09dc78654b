"""SMT-LIB2 printing and parsing for terms and solver replies."""

from __future__ import annotations

import re
from typing import Iterable, Optional

from .terms import (BOOL, BUILTINS, INT, FuncDecl, Int, Sort, Term, TRUE, FALSE, bound_var)

_SIMPLE = re.compile(r"^[A-Za-z~!@$%^&*_+=<>.?/\-][A-Za-z0-9~!@$%^&*_+=<>.?/\-]*$")
_RESERVED = {"and", "or", "not", "=>", "=", "distinct", "ite", "let", "forall", "exists", "true", "false",
             "par", "_", "!", "as", "select", "store", "assert", "check-sat"}


def symbol(name: str) -> str:
    if _SIMPLE.match(name) and name not in _RESERVED and name not in BUILTINS:
        return name
    return "|" + name.replace("|", "_").replace("\\", "_") + "|"


def to_smt(t: Term) -> str:
    parts: list[str] = []
    _emit(t, parts)
    return "".join(parts)


def _emit(t: Term, out: list) -> None:
    # explicit stack keeps deep conjunctions off the Python call stack
    stack: list = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, str):
            out.append(x)
            continue
        op = x.op
        if op == "lit":
            if x.sort == BOOL:
                out.append("true" if x.value else "false")
            elif x.value < 0:
                out.append(f"(- {-x.value})")
            else:
                out.append(str(x.value))
            continue
        if op == "var":
            out.append(symbol(x.value))
            continue
        head = symbol(x.value.name) if op == "app" else op
        if not x.args:
            out.append(head)
            continue
        out.append("(" + head)
        stack.append(")")
        for a in reversed(x.args):
            stack.append(a)
            stack.append(" ")


def declare(decl: FuncDecl) -> str:
    dom = " ".join(str(s) for s in decl.domain)
    return f"(declare-fun {symbol(decl.name)} ({dom}) {decl.range})"


# ---------------------------------------------------------------------------
# s-expressions

_TOK = re.compile(r'\s*(?:(\()|(\))|(\|[^|]*\|)|("(?:[^"]|"")*")|([^\s()|";]+)|(;[^\n]*))')


def parse_sexprs(text: str) -> list:
    """Parse a sequence of s-expressions into nested lists of atom strings."""
    out: list = []
    stack: list[list] = []
    pos = 0
    while pos < len(text):
        m = _TOK.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise ValueError(f"bad s-expression near {text[pos:pos + 30]!r}")
        pos = m.end()
        lp, rp, quoted, string, atom, comment = m.groups()
        if comment is not None:
            continue
        if lp:
            stack.append([])
        elif rp:
            if not stack:
                raise ValueError("unbalanced ')'")
            done = stack.pop()
            (stack[-1] if stack else out).append(done)
        else:
            tok = quoted if quoted is not None else (string if string is not None else atom)
            if tok is None:
                continue
            (stack[-1] if stack else out).append(tok)
    if stack:
        raise ValueError("unbalanced '('")
    return out


def _unquote(s: str) -> str:
    return s[1:-1] if s.startswith("|") and s.endswith("|") else s


def parse_term(sx, decls: dict, bound: Optional[dict] = None) -> Term:
    """Rebuild a term from an s-expression using the declarations in ``decls``."""
    bound = bound or {}
    if isinstance(sx, str):
        if sx == "true":
            return TRUE
        if sx == "false":
            return FALSE
        if re.fullmatch(r"\d+", sx):
            return Int(int(sx))
        name = _unquote(sx)
        if name in bound:
            return bound[name]
        d = decls.get(name)
        if d is None:
            raise ValueError(f"unknown symbol {name!r}")
        return Term("app", (), d.range, d)
    head = sx[0]
    if head == "-" and len(sx) == 2 and isinstance(sx[1], str) and sx[1].isdigit():
        return Int(-int(sx[1]))
    args = tuple(parse_term(a, decls, bound) for a in sx[1:])
    if isinstance(head, str) and head in BUILTINS:
        if head == "ite":
            sort = args[1].sort
        elif head == "select":
            sort = Sort(args[0].sort.name.rsplit(" ", 1)[1].rstrip(")"))
        elif head == "store":
            sort = args[0].sort
        else:
            sort = BUILTINS[head]
        return Term(head, args, sort)
    name = _unquote(head)
    d = decls.get(name)
    if d is None:
        raise ValueError(f"unknown function {name!r}")
    return Term("app", args, d.range, d)


def parse_value(sx):
    """Model value: int, bool, or an opaque string for uninterpreted sorts."""
    if isinstance(sx, list):
        if len(sx) == 2 and sx[0] == "-":
            return -parse_value(sx[1])
        raise ValueError(f"unsupported model value {sx!r}")
    if sx == "true":
        return True
    if sx == "false":
        return False
    if re.fullmatch(r"-?\d+", sx):
        return int(sx)
    return _unquote(sx)


def format_sexpr(sx) -> str:
    if isinstance(sx, list):
        return "(" + " ".join(format_sexpr(x) for x in sx) + ")"
    return sx
