"""Loop conditions for finite algebras and the digraph machinery behind them."""
from .algebra import App, FiniteAlgebra, Operation, Var, eval_term, free_algebra, subpower_closure
from .digraph import INFINITY, Digraph, algebraic_length, make_basic, strong_components
from .errors import (
    AlgebraError,
    BudgetExceeded,
    CapExceeded,
    EdgeCapExceeded,
    InvalidParameter,
    LoopsatError,
    VerificationFailed,
)
from .homsearch import HomProblem, enumerate_homs, find_hom, verify_hom
from .loopcond import (
    LoopCondition,
    builtin_algebra,
    builtin_condition,
    classify_condition,
    condition_digraph,
    find_cyclic_term,
    satisfies,
)

__version__ = "0.1.0"

__all__ = [
    "AlgebraError", "App", "BudgetExceeded", "CapExceeded", "Digraph", "EdgeCapExceeded", "FiniteAlgebra",
    "HomProblem", "INFINITY", "InvalidParameter", "LoopCondition", "LoopsatError", "Operation", "Var",
    "VerificationFailed", "algebraic_length", "builtin_algebra", "builtin_condition", "classify_condition",
    "condition_digraph", "enumerate_homs", "eval_term", "find_cyclic_term", "find_hom", "free_algebra",
    "make_basic", "satisfies", "strong_components", "subpower_closure", "verify_hom",
]
