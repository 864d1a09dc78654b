"""External SMT solver client speaking SMT-LIB2 over a subprocess pipe."""

from __future__ import annotations

import os
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .smtlib import declare, format_sexpr, parse_sexprs, parse_value, symbol, to_smt
from .terms import POINT, FuncDecl, Sort, Term, decls_of

DEFAULT_SMT_CMD = "z3 -in -smt2"
DEFAULT_TIMEOUT = 30.0


class SolverError(Exception):
    pass


class SolverCrashed(SolverError):
    def __init__(self, status, stderr: str):
        self.status = status
        self.stderr = stderr
        super().__init__(f"solver exited with status {status}: {stderr[:300]}")


class ProtocolError(SolverError):
    pass


@dataclass(frozen=True)
class Sat:
    model: dict = field(default_factory=dict)  # Term -> value

    def __getitem__(self, t: Term):
        return self.model[t]


@dataclass(frozen=True)
class Unsat:
    pass


@dataclass(frozen=True)
class Unknown:
    reason: str = ""


SolverVerdict = Union[Sat, Unsat, Unknown]


class Vocabulary:
    """Declared sorts and function symbols, in declaration order."""

    def __init__(self, sorts: Sequence[Sort] = (), decls: Iterable[FuncDecl] = ()):
        self.sorts: list[Sort] = list(sorts)
        self.decls: dict[str, FuncDecl] = {}
        for d in decls:
            self.add(d)

    def add(self, d: FuncDecl) -> FuncDecl:
        prev = self.decls.get(d.name)
        if prev is not None and prev != d:
            raise TypeError(f"symbol {d.name} redeclared with a different signature")
        self.decls[d.name] = d
        return d

    def add_sort(self, s: Sort) -> None:
        if s not in self.sorts:
            self.sorts.append(s)

    def extend(self, terms: Iterable[Term]) -> "Vocabulary":
        for d in decls_of(terms):
            self.add(d)
        return self

    def copy(self) -> "Vocabulary":
        return Vocabulary(self.sorts, self.decls.values())

    def check(self, terms: Iterable[Term]) -> None:
        for d in decls_of(terms):
            if self.decls.get(d.name) != d:
                raise TypeError(f"symbol {d.name} not declared in vocabulary")

    def declarations(self) -> list[str]:
        out = [f"(declare-sort {s} 0)" for s in self.sorts]
        out += [declare(d) for d in self.decls.values()]
        return out


def smt_command(cmd: Optional[str] = None) -> list[str]:
    return shlex.split(cmd or os.environ.get("GRAMMATIC_SMT") or DEFAULT_SMT_CMD)


def build_script(vocab: Vocabulary, assertions: Sequence[Term], logic: str = "QF_UFLIA") -> str:
    """The query script up to and including ``(check-sat)``; deterministic."""
    vocab.check(assertions)
    lines = ["(set-option :produce-models true)", f"(set-logic {logic})"]
    lines += vocab.declarations()
    lines += [f"(assert {to_smt(a)})" for a in assertions]
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


class SmtSession:
    """One solver subprocess answering one query."""

    def __init__(self, cmd: Optional[str] = None, timeout: float = DEFAULT_TIMEOUT):
        self.argv = smt_command(cmd)
        self.timeout = timeout
        self.proc: Optional[subprocess.Popen] = None
        self._timer: Optional[threading.Timer] = None
        self.timed_out = False

    def __enter__(self) -> "SmtSession":
        try:
            self.proc = subprocess.Popen(self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                         stderr=subprocess.PIPE, text=True, bufsize=1)
        except OSError as e:
            raise SolverCrashed(None, f"cannot start {self.argv!r}: {e}") from None
        self._timer = threading.Timer(self.timeout, self._kill)
        self._timer.daemon = True
        self._timer.start()
        return self

    def _kill(self) -> None:
        self.timed_out = True
        if self.proc and self.proc.poll() is None:
            self.proc.kill()

    def __exit__(self, *exc) -> None:
        if self._timer:
            self._timer.cancel()
        if self.proc:
            try:
                if self.proc.poll() is None:
                    try:
                        self.proc.stdin.write("(exit)\n")
                        self.proc.stdin.flush()
                    except (BrokenPipeError, OSError, ValueError):
                        pass
                    try:
                        self.proc.wait(timeout=2)
                    except subprocess.TimeoutExpired:
                        self.proc.kill()
                        self.proc.wait()
            finally:
                for s in (self.proc.stdin, self.proc.stdout, self.proc.stderr):
                    try:
                        s.close()
                    except OSError:
                        pass

    def send(self, text: str) -> None:
        try:
            self.proc.stdin.write(text)
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            self._raise_dead()

    def read_sexpr(self):
        """Read one complete reply (an atom line or a balanced s-expression)."""
        buf = ""
        depth = 0
        started = False
        while True:
            line = self.proc.stdout.readline()
            if line == "":
                self._raise_dead()
            buf += line
            for ch in line:
                if ch == "(":
                    depth += 1
                    started = True
                elif ch == ")":
                    depth -= 1
            if buf.strip() and (depth <= 0):
                break
        items = parse_sexprs(buf)
        if len(items) != 1:
            raise ProtocolError(f"unexpected reply {buf!r}")
        item = items[0]
        if isinstance(item, list) and item and item[0] == "error":
            raise ProtocolError(f"solver error: {format_sexpr(item)}")
        return item

    def _raise_dead(self):
        if self.timed_out:
            raise TimeoutError
        status = self.proc.wait()
        err = self.proc.stderr.read() if self.proc.stderr else ""
        raise SolverCrashed(status, err)


def check_sat(vocab: Vocabulary, assertions: Sequence[Term], timeout: float = DEFAULT_TIMEOUT,
              query: Sequence[Term] = (), cmd: Optional[str] = None, logic: str = "QF_UFLIA") -> SolverVerdict:
    """Decide the conjunction of ``assertions``; on Sat, ``query`` terms are evaluated."""
    script = build_script(vocab, assertions, logic)
    try:
        with SmtSession(cmd, timeout) as s:
            s.send(script)
            reply = s.read_sexpr()
            if reply == "unsat":
                return Unsat()
            if reply == "unknown":
                return Unknown("solver returned unknown")
            if reply != "sat":
                raise ProtocolError(f"unexpected check-sat reply {reply!r}")
            model = {}
            if query:
                s.send("(get-value (" + " ".join(to_smt(t) for t in query) + "))\n")
                vals = s.read_sexpr()
                if not isinstance(vals, list) or len(vals) != len(query):
                    raise ProtocolError(f"bad get-value reply {vals!r}")
                for t, pair in zip(query, vals):
                    model[t] = parse_value(pair[1])
            return Sat(model)
    except TimeoutError:
        return Unknown("timeout")


def run_script(script: str, timeout: float, cmd: Optional[str] = None) -> tuple[list, bool]:
    """Feed a complete script and collect every reply.  Returns (replies, timed_out)."""
    argv = smt_command(cmd)
    try:
        proc = subprocess.run(argv, input=script, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return [], True
    except OSError as e:
        raise SolverCrashed(None, f"cannot start {argv!r}: {e}") from None
    try:
        items = parse_sexprs(proc.stdout)
    except ValueError as e:
        raise ProtocolError(str(e)) from None
    if not items and proc.returncode != 0:
        raise SolverCrashed(proc.returncode, proc.stderr)
    return items, False


class QueryStats:
    """Process-wide counters, handy for reports and query-count tests."""

    count = 0
    seconds = 0.0

    @classmethod
    def reset(cls) -> None:
        cls.count = 0
        cls.seconds = 0.0


def counted_check_sat(*args, **kwargs) -> SolverVerdict:
    t0 = time.perf_counter()
    try:
        return check_sat(*args, **kwargs)
    finally:
        QueryStats.count += 1
        QueryStats.seconds += time.perf_counter() - t0
