"""Shared helpers: random models and an independent HiGHS oracle."""
import itertools
import math

import numpy as np
import pytest
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from mimfrelax.model import LinearExpr, LinearModel, ObjSense, Sense, VarKind
from mimfrelax.solver import KERNELS


@pytest.fixture(params=sorted(KERNELS))
def backend(request):
    return request.param


def highs_solve(model: LinearModel, integral: bool = True):
    """Optimal objective from scipy's HiGHS, or None if infeasible/unbounded."""
    c = model.objective_vector()
    sign = -1.0 if model.sense is ObjSense.MAX else 1.0
    lb, ub = model.bounds_arrays()
    lo, hi = model.row_bounds()
    A = model.matrix()
    integrality = np.zeros(model.num_vars)
    if integral:
        integrality[model.binary_ids()] = 1
    cons = [LinearConstraint(A, lo, hi)] if model.num_rows else []
    res = milp(sign * c, constraints=cons, bounds=Bounds(lb, ub), integrality=integrality,
               options={"mip_rel_gap": 1e-9})
    if res.status != 0:
        return None
    return sign * res.fun + model.objective.constant


def random_mixed_model(rng, n_bin, n_cont, n_rows, sense=ObjSense.MIN):
    """Bounded, usually feasible mixed-binary model with mixed row senses."""
    m = LinearModel(name="random")
    ids = [m.add_variable(f"z{j}", 0, 1, VarKind.BINARY) for j in range(n_bin)]
    for i in range(n_cont):
        lo = float(rng.uniform(-3, 1))
        ids.append(m.add_variable(f"x{i}", lo, lo + float(rng.uniform(0.5, 5))))
    ref = np.array([rng.integers(0, 2) if v.is_binary else rng.uniform(v.lower, v.upper) for v in m.variables])
    for r in range(n_rows):
        cols = rng.choice(len(ids), size=min(len(ids), int(rng.integers(2, 6))), replace=False)
        coefs = rng.normal(size=cols.size).round(3)
        coefs[coefs == 0] = 1.0
        act = float(coefs @ ref[cols])
        rs = [Sense.LE, Sense.GE, Sense.EQ][int(rng.choice(3, p=[0.45, 0.45, 0.1]))]
        slack = float(rng.uniform(0, 2))
        rhs = act + slack if rs is Sense.LE else act - slack if rs is Sense.GE else act
        m.add_constraint(LinearExpr(dict(zip(cols.tolist(), coefs.tolist()))), rs, rhs, f"r{r}")
    m.set_objective(LinearExpr(dict(enumerate(rng.normal(size=len(ids)).round(3).tolist()))), sense)
    return m


def enumerate_binaries(model: LinearModel, backend=None):
    """Best objective over all binary assignments, each completed by an LP (our solver)."""
    from mimfrelax.solver import LPSolver, SolveStatus
    bins = model.binary_ids()
    lp = LPSolver(model, backend=backend)
    best = math.inf
    sign = -1.0 if model.sense is ObjSense.MAX else 1.0
    for bits in itertools.product((0.0, 1.0), repeat=len(bins)):
        for j, b in zip(bins, bits):
            lp.set_var_bounds(j, b, b)
        res = lp.solve()
        if res.status is SolveStatus.OPTIMAL:
            best = min(best, sign * res.objective)
    return sign * best if math.isfinite(best) else None


# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[num])
