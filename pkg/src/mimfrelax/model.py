"""Sparse mixed-binary linear models.

Every relaxation builder writes into a :class:`LinearModel`; the simplex and
branch-and-bound solvers, the oracle and the MPS writer all read from it.
Variables and rows are append-only and addressed by dense integer ids.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

FEAS_TOL = 1e-7
INT_TOL = 1e-6


class ModelError(ValueError):
    pass


class ReversedBounds(ModelError):
    pass


class DuplicateName(ModelError):
    pass


class UnknownVariable(ModelError):
    pass


class DimensionMismatch(ModelError):
    pass


class VarKind(enum.Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


class Sense(enum.Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class ObjSense(enum.Enum):
    MIN = "min"
    MAX = "max"


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    lower: float
    upper: float
    kind: VarKind = VarKind.CONTINUOUS

    @property
    def is_binary(self) -> bool:
        return self.kind is VarKind.BINARY


class LinearExpr:
    """Sparse affine expression ``sum(coef * var) + constant``.

    Zero coefficients are never stored, so two expressions with the same
    nonzero pattern compare equal regardless of how they were assembled.
    """

    __slots__ = ("terms", "constant")

    def __init__(self, terms: Optional[Mapping[int, float]] = None, constant: float = 0.0):
        self.terms: Dict[int, float] = {}
        self.constant = float(constant)
        if terms:
            for vid, coef in terms.items():
                self._accumulate(int(vid), float(coef))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[int, float]], constant: float = 0.0) -> "LinearExpr":
        expr = cls(constant=constant)
        for vid, coef in pairs:
            expr._accumulate(int(vid), float(coef))
        return expr

    @classmethod
    def var(cls, vid: int, coef: float = 1.0) -> "LinearExpr":
        return cls({vid: coef})

    def _accumulate(self, vid: int, coef: float) -> None:
        total = self.terms.get(vid, 0.0) + coef
        if total == 0.0:
            self.terms.pop(vid, None)
        else:
            self.terms[vid] = total

    def copy(self) -> "LinearExpr":
        out = LinearExpr(constant=self.constant)
        out.terms = dict(self.terms)
        return out

    def __add__(self, other: Union["LinearExpr", float, int]) -> "LinearExpr":
        out = self.copy()
        if isinstance(other, LinearExpr):
            for vid, coef in other.terms.items():
                out._accumulate(vid, coef)
            out.constant += other.constant
        else:
            out.constant += float(other)
        return out

    __radd__ = __add__

    def __neg__(self) -> "LinearExpr":
        return self * -1.0

    def __sub__(self, other: Union["LinearExpr", float, int]) -> "LinearExpr":
        return self + (-other)

    def __rsub__(self, other: Union[float, int]) -> "LinearExpr":
        return (-self) + other

    def __mul__(self, scalar: float) -> "LinearExpr":
        scalar = float(scalar)
        if scalar == 0.0:
            return LinearExpr()
        out = LinearExpr(constant=self.constant * scalar)
        out.terms = {vid: coef * scalar for vid, coef in self.terms.items()}
        return out

    __rmul__ = __mul__

    def value(self, point: Sequence[float]) -> float:
        return sum(coef * point[vid] for vid, coef in self.terms.items()) + self.constant

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LinearExpr):
            return NotImplemented
        return self.terms == other.terms and self.constant == other.constant

    def __repr__(self) -> str:
        body = " + ".join(f"{c:g}*v{v}" for v, c in sorted(self.terms.items()))
        if self.constant or not body:
            body = f"{body} + {self.constant:g}" if body else f"{self.constant:g}"
        return f"LinearExpr({body})"


@dataclass
class Constraint:
    expr: LinearExpr
    sense: Sense
    rhs: float
    name: str


@dataclass
class Evaluation:
    objective: float
    max_violation: float
    integrality_violation: float
    row_violations: np.ndarray
    bound_violation: float

    @property
    def feasible(self) -> bool:
        return self.max_violation == 0.0 and self.integrality_violation <= INT_TOL


@dataclass
class LinearModel:
    name: str = "model"
    variables: List[Variable] = field(default_factory=list)
    constraints: List[Constraint] = field(default_factory=list)
    objective: LinearExpr = field(default_factory=LinearExpr)
    sense: ObjSense = ObjSense.MIN

    def __post_init__(self) -> None:
        self._names = {v.name: v.id for v in self.variables}
        self._counters: Dict[str, int] = {}

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_rows(self) -> int:
        return len(self.constraints)

    def add_variable(
        self,
        name: str,
        lower: float = 0.0,
        upper: float = math.inf,
        kind: VarKind = VarKind.CONTINUOUS,
    ) -> int:
        lower, upper = float(lower), float(upper)
        if math.isnan(lower) or math.isnan(upper):
            raise ModelError(f"NaN bound on variable {name!r}")
        if lower > upper:
            raise ReversedBounds(f"variable {name!r}: lower {lower} > upper {upper}")
        if kind is VarKind.BINARY and (lower < 0.0 or upper > 1.0):
            raise ModelError(f"binary variable {name!r} has bounds outside [0, 1]")
        if name in self._names:
            raise DuplicateName(f"variable name {name!r} already used")
        vid = len(self.variables)
        self.variables.append(Variable(vid, name, lower, upper, kind))
        self._names[name] = vid
        return vid

    def fresh_name(self, base: str) -> str:
        """Return ``base_<k>`` that is not yet a variable name."""
        k = self._counters.get(base, 0)
        while f"{base}_{k}" in self._names:
            k += 1
        self._counters[base] = k + 1
        return f"{base}_{k}"

    def var_id(self, name: str) -> int:
        return self._names[name]

    def set_bounds(self, vid: int, lower: float, upper: float) -> None:
        self._check_id(vid)
        if lower > upper:
            raise ReversedBounds(f"variable {vid}: lower {lower} > upper {upper}")
        v = self.variables[vid]
        self.variables[vid] = Variable(v.id, v.name, float(lower), float(upper), v.kind)

    def _check_id(self, vid: int) -> None:
        if not 0 <= vid < len(self.variables):
            raise UnknownVariable(f"variable id {vid} not in model with {len(self.variables)} variables")

    def add_constraint(
        self,
        expr: LinearExpr,
        sense: Union[Sense, str],
        rhs: float = 0.0,
        name: Optional[str] = None,
    ) -> int:
        sense = Sense(sense)
        for vid in expr.terms:
            self._check_id(vid)
        row = LinearExpr()
        row.terms = dict(expr.terms)
        cid = len(self.constraints)
        self.constraints.append(
            Constraint(row, sense, float(rhs) - expr.constant, name or f"c{cid}")
        )
        return cid

    def set_objective(self, expr: LinearExpr, sense: Union[ObjSense, str] = ObjSense.MIN) -> None:
        for vid in expr.terms:
            self._check_id(vid)
        self.objective = expr.copy()
        self.sense = ObjSense(sense)

    def binary_ids(self) -> List[int]:
        return [v.id for v in self.variables if v.is_binary]

    def bounds_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        lb = np.array([v.lower for v in self.variables], dtype=float)
        ub = np.array([v.upper for v in self.variables], dtype=float)
        return lb, ub

    def row_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.full(self.num_rows, -np.inf)
        hi = np.full(self.num_rows, np.inf)
        for i, con in enumerate(self.constraints):
            if con.sense is not Sense.LE:
                lo[i] = con.rhs
            if con.sense is not Sense.GE:
                hi[i] = con.rhs
        return lo, hi

    def matrix(self) -> sp.csr_matrix:
        indptr = [0]
        indices: List[int] = []
        data: List[float] = []
        for con in self.constraints:
            for vid in sorted(con.expr.terms):
                indices.append(vid)
                data.append(con.expr.terms[vid])
            indptr.append(len(indices))
        return sp.csr_matrix(
            (np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
            shape=(self.num_rows, self.num_vars),
        )

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for vid, coef in self.objective.terms.items():
            c[vid] = coef
        return c

    def evaluate(self, point: Sequence[float], tol: float = FEAS_TOL) -> Evaluation:
        """Objective value and worst violation of rows, bounds and integrality.

        Violations at or below ``tol`` are reported as exactly zero.
        """
        x = np.asarray(point, dtype=float)
        if x.shape != (self.num_vars,):
            raise DimensionMismatch(f"point has shape {x.shape}, model has {self.num_vars} variables")
        viol = np.zeros(self.num_rows)
        for i, con in enumerate(self.constraints):
            act = con.expr.value(x)
            if con.sense is Sense.LE:
                viol[i] = max(0.0, act - con.rhs)
            elif con.sense is Sense.GE:
                viol[i] = max(0.0, con.rhs - act)
            else:
                viol[i] = abs(act - con.rhs)
        lb, ub = self.bounds_arrays()
        bound_viol = float(np.max(np.maximum(lb - x, x - ub), initial=0.0))
        bound_viol = max(bound_viol, 0.0)
        worst = max(float(viol.max(initial=0.0)), bound_viol)
        bins = self.binary_ids()
        int_viol = float(np.max(np.abs(x[bins] - np.round(x[bins])), initial=0.0)) if bins else 0.0
        return Evaluation(
            objective=self.objective.value(x),
            max_violation=0.0 if worst <= tol else worst,
            integrality_violation=int_viol,
            row_violations=np.where(viol <= tol, 0.0, viol),
            bound_violation=0.0 if bound_viol <= tol else bound_viol,
        )

    def structurally_equal(self, other: "LinearModel", tol: float = 1e-12) -> bool:
        if (self.num_vars, self.num_rows, self.sense) != (other.num_vars, other.num_rows, other.sense):
            return False
        for a, b in zip(self.variables, other.variables):
            if a.kind is not b.kind or a.lower != b.lower or a.upper != b.upper:
                return False
        for a, b in zip(self.constraints, other.constraints):
            if a.sense is not b.sense or abs(a.rhs - b.rhs) > tol:
                return False
            if a.expr.terms.keys() != b.expr.terms.keys():
                return False
            if any(abs(a.expr.terms[k] - b.expr.terms[k]) > tol for k in a.expr.terms):
                return False
        if self.objective.terms.keys() != other.objective.terms.keys():
            return False
        if abs(self.objective.constant - other.objective.constant) > tol:
            return False
        return all(abs(self.objective.terms[k] - other.objective.terms[k]) <= tol for k in self.objective.terms)
