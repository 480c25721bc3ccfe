"""Multi-convex modeling: expression trees with signed curvature analysis,
fixed-set verification, and block coordinate descent over cone subproblems."""

from . import functions
from .analysis import curvature_of, evaluate, sign_of
from .autodiff import gradient
from .bcd import (SolveResult, SolveSettings, bcd_solve, objective_trace, random_initialize,
                  solve_restarts)
from .canonicalize import solve_convex, to_cone_program
from .cone import BACKEND, project_cone, solve_cone
from .document import dumps, loads, parse_problem
from .errors import (CanonicalizationError, DomainError, NonDifferentiableError, NotDMCPError,
                     ShapeError)
from .expression import Constant, Expression, Parameter, Variable
from .lattice import Curvature, Sign
from .multiconvex import (IndexSet, build_conflict_graph, find_minimal_sets, fix,
                          is_dcp_with_fixed, is_dmcp)
from .problem import SOC, Problem, is_dcp

__all__ = [
    "functions", "curvature_of", "evaluate", "sign_of", "gradient", "SolveResult",
    "SolveSettings", "bcd_solve", "objective_trace", "random_initialize", "solve_restarts",
    "solve_convex", "to_cone_program", "BACKEND", "project_cone", "solve_cone", "dumps", "loads",
    "parse_problem", "CanonicalizationError", "DomainError", "NonDifferentiableError",
    "NotDMCPError", "ShapeError", "Constant", "Expression", "Parameter", "Variable", "Curvature",
    "Sign", "IndexSet", "build_conflict_graph", "find_minimal_sets", "fix", "is_dcp_with_fixed",
    "is_dmcp", "SOC", "Problem", "is_dcp",
]
