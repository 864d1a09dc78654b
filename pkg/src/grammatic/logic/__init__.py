"""Formulas, SMT-LIB2 text, and the external solver client."""

from .terms import (BOOL, FALSE, INT, POINT, TRUE, Add, And, Bool, Distinct, Eq, Formula, FuncDecl, Ge, Gt,
                    Implies, Int, Ite, Le, Lt, Mul, Neg, Neq, Not, Or, Select, Sort, Store, Sub, Term, app,
                    array_sort, bound_var, const, decls_of, evaluate, subterms, substitute)
from .smtlib import declare, parse_sexprs, parse_term, parse_value, symbol, to_smt
from .simplify import simplify
from .solver import (DEFAULT_TIMEOUT, ProtocolError, QueryStats, Sat, SmtSession, SolverCrashed, SolverError,
                     SolverVerdict, Unknown, Unsat, Vocabulary, build_script, check_sat, counted_check_sat,
                     run_script, smt_command)
