"""Embedded LP (bounded dual simplex) and binary branch-and-bound solvers."""
from ._backend import DEFAULT as DEFAULT_BACKEND, KERNELS
from .bnb import DEFAULT_NODE_LIMIT, lp_gap, solve_milp
from .simplex import Basis, LPSolver, SolveResult, SolveStatus, solve_lp

__all__ = [
    "Basis",
    "DEFAULT_BACKEND",
    "DEFAULT_NODE_LIMIT",
    "KERNELS",
    "LPSolver",
    "SolveResult",
    "SolveStatus",
    "lp_gap",
    "solve_lp",
    "solve_milp",
]
