"""Program-synthesis classifier: DSL, cost model, fitting, search, classification."""

from .classify import NEGATIVE, POSITIVE, Decision, classify, decide
from .dsl import (AcceptAll, Add, AssertLinear, Draw, Index, Move, Mul, Neg, Num, Program,
                  Relate, Repeat, Sym, accept_all, cost, expand, from_sexpr, to_sexpr)
from .fit import EPS_POS, EPS_SCALE, TIME_LIMIT, FitResult, count_violations, fit
from .search import Budget, SearchLog, synthesize
from .smtlib import configured_solver, emit_constraints, run_external
from .solver import SolverTimeout, feasible

__all__ = [
    "AcceptAll", "Add", "AssertLinear", "Budget", "Decision", "Draw", "EPS_POS", "EPS_SCALE",
    "FitResult", "Index", "Move", "Mul", "NEGATIVE", "Neg", "Num", "POSITIVE", "Program",
    "Relate", "Repeat", "SearchLog", "SolverTimeout", "Sym", "TIME_LIMIT", "accept_all",
    "classify", "configured_solver", "count_violations", "cost", "decide", "emit_constraints",
    "expand", "feasible", "fit", "from_sexpr", "run_external", "synthesize", "to_sexpr",
]
