"""Bounded dual simplex over a :class:`~mimfrelax.model.LinearModel`.

Rows are written as ``A x - s = 0`` with one logical variable ``s_i`` per row
whose bounds carry the row sense, so the all-logical basis is always a valid
starting point and every variable is handled with implicit bounds. Boxed
variables make any basis dual feasible after moving nonbasics to the bound
matching their reduced-cost sign, which is what makes warm starts after bound
changes (branch-and-bound, oracle probes) cheap.
"""
from __future__ import annotations

import enum
import logging
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..model import LinearModel, ObjSense
from . import _backend
from ._kernel_py import AT_LOWER, AT_UPPER, BASIC, INFEASIBLE, NUMERIC, OPTIMAL, PIVOT_LIMIT, lu_factor

log = logging.getLogger(__name__)

BIG = 1e9
REFACTOR_EVERY = 100
TOL_PRIMAL = 1e-9
TOL_DUAL = 1e-9
TOL_PIVOT = 1e-8


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NODE_LIMIT = "node_limit"
    ITER_LIMIT = "iter_limit"


@dataclass
class SolveResult:
    status: SolveStatus
    objective: float = float("nan")
    point: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lp_iterations: int = 0
    bb_nodes: int = 0
    wall_time: float = 0.0
    bound: float = float("nan")
    duals: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = None

    @property
    def ok(self) -> bool:
        return self.status is SolveStatus.OPTIMAL

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "objective": _json_float(self.objective),
            "bound": _json_float(self.bound),
            "point": [float(v) for v in self.point],
            "lp_iterations": int(self.lp_iterations),
            "bb_nodes": int(self.bb_nodes),
            "wall_time": float(self.wall_time),
        }


def _json_float(v: float):
    return None if v != v or v in (float("inf"), float("-inf")) else float(v)


@dataclass(frozen=True)
class Basis:
    head: np.ndarray
    status: np.ndarray


def _pow2(v: np.ndarray) -> np.ndarray:
    return np.exp2(np.round(np.log2(v)))


def geometric_scaling(A, passes: int = 4):
    """Row and column factors (powers of two) for geometric-mean scaling."""
    m, n = A.shape
    row = np.ones(m)
    col = np.ones(n)
    if A.nnz == 0:
        return row, col
    coo = A.tocoo()
    absval = np.abs(coo.data)
    for _ in range(passes):
        vals = absval * row[coo.row] * col[coo.col]
        rmax = np.zeros(m)
        rmin = np.full(m, np.inf)
        np.maximum.at(rmax, coo.row, vals)
        np.minimum.at(rmin, coo.row, vals)
        has = rmax > 0
        row[has] /= _pow2(np.sqrt(rmax[has] * rmin[has]))
        vals = absval * row[coo.row] * col[coo.col]
        cmax = np.zeros(n)
        cmin = np.full(n, np.inf)
        np.maximum.at(cmax, coo.col, vals)
        np.minimum.at(cmin, coo.col, vals)
        has = cmax > 0
        col[has] /= _pow2(np.sqrt(cmax[has] * cmin[has]))
    return row, col


class LPSolver:
    """Reusable LP relaxation of a model.

    Binary variables are relaxed to their bounds. Variable bounds and the
    objective may be changed between :meth:`solve` calls; the previous basis
    is kept as a warm start.
    """

    def __init__(self, model: LinearModel, *, scale: bool = True, backend: Optional[str] = None):
        self.model = model
        kmod = _backend.get_kernel(backend)
        self._kernel, self._ftran, self._btran = kmod.run_dual, kmod.ftran, kmod.btran
        self.backend = backend or _backend.DEFAULT
        A = model.matrix().tocsc()
        m, n = A.shape
        self.m, self.n = m, n
        if scale:
            self.row_scale, self.col_scale = geometric_scaling(A)
        else:
            self.row_scale, self.col_scale = np.ones(m), np.ones(n)
        As = (A.multiply(self.row_scale[:, None]).multiply(self.col_scale[None, :])).tocsc()
        As.sort_indices()
        self._A = As
        self._AT = As.T.tocsr()
        self._AI = sp.hstack([As, -sp.identity(m, format="csc")], format="csc")
        self.Ap = As.indptr.astype(np.int64)
        self.Ai = As.indices.astype(np.int64)
        self.Ax = As.data.astype(float)
        Ar = As.tocsr()
        Ar.sort_indices()
        self.Rp = Ar.indptr.astype(np.int64)
        self.Rj = Ar.indices.astype(np.int64)
        self.Rx = Ar.data.astype(float)

        self.var_lb, self.var_ub = model.bounds_arrays()
        self.row_lo, self.row_hi = model.row_bounds()
        self._obj_sign = -1.0 if model.sense is ObjSense.MAX else 1.0
        self._obj_const = model.objective.constant
        self._c = model.objective_vector()
        self._cost = np.zeros(n + m)
        self._sync_cost()

        self.lb = np.empty(n + m)
        self.ub = np.empty(n + m)
        self._sync_bounds()

        self.head: Optional[np.ndarray] = None
        self.status: Optional[np.ndarray] = None
        self.x = np.zeros(n + m)
        self.d = np.zeros(n + m)
        self.lu = None
        # reduced costs in self.d match the current basis and cost vector
        self._duals_current = False
        self._eta_start = np.zeros(REFACTOR_EVERY + 1, dtype=np.int64)
        self._eta_row = np.zeros(REFACTOR_EVERY, dtype=np.int64)
        self._eta_piv = np.zeros(REFACTOR_EVERY)
        self._eta_idx = np.zeros(REFACTOR_EVERY * max(m, 1), dtype=np.int64)
        self._eta_val = np.zeros(REFACTOR_EVERY * max(m, 1))
        self._eta_count = np.zeros(2, dtype=np.int64)
        self._factor_age = 0
        self.max_iterations = 100 * (m + n) + 100

    # -- problem data --------------------------------------------------
    def _sync_cost(self) -> None:
        self._cost[: self.n] = self._obj_sign * self._c * self.col_scale
        self._cost[self.n:] = 0.0

    def _sync_bounds(self) -> None:
        lo = np.concatenate([self.var_lb / self.col_scale, self.row_lo * self.row_scale])
        hi = np.concatenate([self.var_ub / self.col_scale, self.row_hi * self.row_scale])
        self._lo_art = ~np.isfinite(lo)
        self._hi_art = ~np.isfinite(hi)
        self.lb[:] = np.where(self._lo_art, -BIG, lo)
        self.ub[:] = np.where(self._hi_art, BIG, hi)

    def set_var_bounds(self, vid: int, lower: float, upper: float) -> None:
        self.var_lb[vid] = lower
        self.var_ub[vid] = upper
        s = self.col_scale[vid]
        self.lb[vid] = lower / s if np.isfinite(lower) else -BIG
        self.ub[vid] = upper / s if np.isfinite(upper) else BIG
        self._lo_art[vid] = not np.isfinite(lower)
        self._hi_art[vid] = not np.isfinite(upper)

    def set_all_var_bounds(self, lower: np.ndarray, upper: np.ndarray) -> None:
        self.var_lb = np.array(lower, dtype=float)
        self.var_ub = np.array(upper, dtype=float)
        self._sync_bounds()

    def set_objective(self, c: np.ndarray, sense: ObjSense = ObjSense.MIN, constant: float = 0.0) -> None:
        self._c = np.array(c, dtype=float)
        self._obj_sign = -1.0 if sense is ObjSense.MAX else 1.0
        self._obj_const = constant
        self._sync_cost()
        self._duals_current = False

    # -- basis ----------------------------------------------------------
    def snapshot(self) -> Optional[Basis]:
        if self.head is None:
            return None
        return Basis(self.head.copy(), self.status.copy())

    def load(self, basis: Optional[Basis]) -> None:
        if basis is None:
            self.head = None
            return
        if self.head is not None and np.array_equal(basis.head, self.head):
            self.status = basis.status.copy()
            return
        self.head = basis.head.copy()
        self.status = basis.status.copy()
        self.lu = None
        self._duals_current = False

    def _cold_start(self) -> None:
        n, m = self.n, self.m
        self._duals_current = False
        self.head = np.arange(n, n + m, dtype=np.int64)
        self.status = np.full(n + m, AT_LOWER, dtype=np.int8)
        self.status[self.head] = BASIC
        if not self._refactor():
            raise RuntimeError("logical basis failed to factor")

    def _refactor(self) -> bool:
        B = self._AI[:, self.head]
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", spla.MatrixRankWarning)
                self.lu = lu_factor(spla.splu(B))
        except (RuntimeError, spla.MatrixRankWarning):
            self.lu = None
            return False
        self._eta_count[:] = 0
        self._factor_age = 0
        return True

    def _eta_args(self):
        return (self._eta_start, self._eta_row, self._eta_piv, self._eta_idx, self._eta_val,
                int(self._eta_count[0]))

    def _compute_duals(self) -> None:
        y = self._btran(self.lu, *self._eta_args(), self._cost[self.head])
        self.d[: self.n] = self._cost[: self.n] - self._AT @ y
        self.d[self.n:] = y
        self.d[self.head] = 0.0
        self._y = y

    def _place_nonbasics(self) -> None:
        nb = self.status != BASIC
        st = self.status
        d = self.d
        st[nb & (d < -TOL_DUAL)] = AT_UPPER
        st[nb & (d > TOL_DUAL)] = AT_LOWER
        lower = st == AT_LOWER
        upper = st == AT_UPPER
        self.x[lower] = self.lb[lower]
        self.x[upper] = self.ub[upper]

    def _compute_primal(self) -> None:
        n = self.n
        xn = self.x.copy()
        xn[self.head] = 0.0
        v = self._A @ xn[:n] - xn[n:]
        self.x[self.head] = -self._ftran(self.lu, *self._eta_args(), v)

    def _max_primal_infeas(self) -> float:
        xb = self.x[self.head]
        return float(np.max(np.maximum(self.lb[self.head] - xb, xb - self.ub[self.head]), initial=0.0))

    # -- solve ------------------------------------------------------------
    def solve(self) -> SolveResult:
        t0 = time.perf_counter()
        if self.head is None:
            self._cold_start()
        elif self.lu is None and not self._refactor():
            self._cold_start()
        state = np.zeros(2, dtype=np.int64)
        iterations = 0
        numeric = 0
        rechecks = 0
        confirmed_infeasible = False
        status = None
        while True:
            if not self._duals_current:
                self._compute_duals()
            self._duals_current = False
            self._place_nonbasics()
            self._compute_primal()
            budget = min(REFACTOR_EVERY - self._factor_age, self.max_iterations - iterations)
            if budget <= 0:
                if iterations >= self.max_iterations:
                    status = SolveStatus.ITER_LIMIT
                    break
                if not self._refactor():
                    self._cold_start()
                continue
            code, piv = self._kernel(
                self.Ap, self.Ai, self.Ax, self.Rp, self.Rj, self.Rx,
                self.lb, self.ub, self.x, self.d, self.head, self.status, self.lu,
                self._eta_start, self._eta_row, self._eta_piv, self._eta_idx, self._eta_val,
                self._eta_count, state, budget, TOL_PRIMAL, TOL_DUAL, TOL_PIVOT,
            )
            iterations += piv
            self._factor_age += piv
            if code == OPTIMAL:
                self._compute_duals()
                dual_bad = self._dual_infeasible()
                self._compute_primal()
                rechecks += 1
                if (self._max_primal_infeas() <= TOL_PRIMAL * 10 and not dual_bad) or rechecks > 5:
                    status = SolveStatus.OPTIMAL
                    self._duals_current = True
                    break
                if self._factor_age and not self._refactor():
                    self._cold_start()
            elif code == INFEASIBLE:
                if confirmed_infeasible or self._factor_age == 0:
                    status = SolveStatus.INFEASIBLE
                    break
                confirmed_infeasible = True
                if not self._refactor():
                    self._cold_start()
            elif code == PIVOT_LIMIT:
                if not self._refactor():
                    self._cold_start()
            elif code == NUMERIC:
                numeric += 1
                if numeric > 5:
                    self._cold_start()
                    numeric = 0
                    state[1] = 1
                elif not self._refactor():
                    self._cold_start()
        return self._result(status, iterations, time.perf_counter() - t0)

    def _dual_infeasible(self) -> bool:
        st = self.status
        d = self.d
        fixed = self.lb == self.ub
        bad_lo = (st == AT_LOWER) & (d < -TOL_DUAL * 10) & ~fixed
        bad_hi = (st == AT_UPPER) & (d > TOL_DUAL * 10) & ~fixed
        return bool(np.any(bad_lo | bad_hi))

    def _result(self, status: SolveStatus, iterations: int, elapsed: float) -> SolveResult:
        n = self.n
        if status is not SolveStatus.OPTIMAL:
            return SolveResult(status, lp_iterations=iterations, wall_time=elapsed)
        nb = self.status != BASIC
        at_art = nb & (
            ((self.status == AT_LOWER) & self._lo_art) | ((self.status == AT_UPPER) & self._hi_art)
        )
        if np.any(at_art):
            return SolveResult(SolveStatus.UNBOUNDED, lp_iterations=iterations, wall_time=elapsed)
        point = self.x[:n] * self.col_scale
        # snap nonbasic structurals onto their exact bounds
        lower = (self.status[:n] == AT_LOWER)
        upper = (self.status[:n] == AT_UPPER)
        point[lower] = self.var_lb[lower]
        point[upper] = self.var_ub[upper]
        obj = float(self._c @ point) + self._obj_const
        duals = self._obj_sign * self._y * self.row_scale
        rc = self._obj_sign * self.d[:n] / self.col_scale
        return SolveResult(
            SolveStatus.OPTIMAL,
            objective=obj,
            point=point,
            lp_iterations=iterations,
            wall_time=elapsed,
            bound=obj,
            duals=duals,
            reduced_costs=rc,
        )


def solve_lp(model: LinearModel, *, backend: Optional[str] = None, scale: bool = True) -> SolveResult:
    """Solve the continuous relaxation of ``model``."""
    return LPSolver(model, backend=backend, scale=scale).solve()
