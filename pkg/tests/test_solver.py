import dataclasses
import math

import numpy as np
import pytest

from conftest import highs_solve, random_mixed_model
from mimfrelax.model import LinearExpr, LinearModel, ObjSense, Sense, VarKind
from mimfrelax.solver import LPSolver, SolveStatus, lp_gap, solve_lp


def _single(lo, hi, sense=ObjSense.MIN):
    m = LinearModel()
    x = m.add_variable("x", lo, hi)
    m.set_objective(LinearExpr({x: 1.0}), sense)
    return m, x


def test_lower_bound_row(backend):
    m, x = _single(-math.inf, math.inf)
    m.add_constraint(LinearExpr({x: 1.0}), Sense.GE, 3.0)
    res = solve_lp(m, backend=backend)
    assert res.status is SolveStatus.OPTIMAL and res.objective == pytest.approx(3.0)


def test_infeasible_pair(backend):
    m, x = _single(-math.inf, math.inf)
    m.add_constraint(LinearExpr({x: 1.0}), Sense.GE, 2.0)
    m.add_constraint(LinearExpr({x: 1.0}), Sense.LE, 1.0)
    assert solve_lp(m, backend=backend).status is SolveStatus.INFEASIBLE


def test_unbounded(backend):
    m, x = _single(0, math.inf, ObjSense.MAX)
    y = m.add_variable("y", 0)
    m.add_constraint(LinearExpr({x: 1.0, y: -1.0}), Sense.LE, 1.0)
    assert solve_lp(m, backend=backend).status is SolveStatus.UNBOUNDED


def test_no_rows(backend):
    m, x = _single(-2, 5, ObjSense.MAX)
    res = solve_lp(m, backend=backend)
    assert res.ok and res.objective == 5.0


def test_objective_constant_and_max(backend):
    m = LinearModel()
    a, b = m.add_variable("a", 0, 4), m.add_variable("b", 0, 4)
    m.add_constraint(LinearExpr({a: 1.0, b: 1.0}), Sense.LE, 5.0)
    m.set_objective(LinearExpr({a: 3.0, b: 2.0}, 1.5), ObjSense.MAX)
    res = solve_lp(m, backend=backend)
    assert res.objective == pytest.approx(3 * 4 + 2 * 1 + 1.5)
    assert np.allclose(res.point, [4, 1])


def test_free_and_negative_variables(backend):
    m = LinearModel()
    a = m.add_variable("a", -math.inf, math.inf)
    b = m.add_variable("b", -math.inf, -1)
    m.add_constraint(LinearExpr({a: 1.0, b: 2.0}), Sense.EQ, 0.0)
    m.add_constraint(LinearExpr({a: 1.0}), Sense.LE, 10.0)
    m.set_objective(LinearExpr({a: -1.0, b: 1.0}))
    res = solve_lp(m, backend=backend)
    assert res.objective == pytest.approx(-15.0)


def _dual_objective(model, res):
    lo, hi = model.row_bounds()
    lb, ub = model.bounds_arrays()
    y, r = res.duals, res.reduced_costs
    row_side = np.where(y > 0, lo, hi)
    var_side = np.where(r > 0, lb, ub)
    ya, ra = np.abs(y) > 1e-12, np.abs(r) > 1e-12
    val = float(y[ya] @ row_side[ya]) + float(r[ra] @ var_side[ra])
    return val + model.objective.constant


@pytest.mark.parametrize("seed", range(40))
def test_random_lps_against_highs(seed, backend):
    rng = np.random.default_rng(seed)
    m = random_mixed_model(rng, 0, int(rng.integers(3, 25)), int(rng.integers(2, 20)),
                           ObjSense.MAX if seed % 3 == 0 else ObjSense.MIN)
    want = highs_solve(m, integral=False)
    res = solve_lp(m, backend=backend)
    assert res.ok and want is not None
    assert res.objective == pytest.approx(want, rel=1e-7, abs=1e-7)
    assert m.evaluate(res.point, tol=1e-7).max_violation == 0.0


@pytest.mark.parametrize("seed", range(20))
def test_strong_duality_and_dual_feasibility(seed):
    rng = np.random.default_rng(100 + seed)
    m = random_mixed_model(rng, 0, int(rng.integers(3, 15)), int(rng.integers(2, 12)))
    res = solve_lp(m)
    assert res.ok
    A = m.matrix()
    c = m.objective_vector()
    assert np.allclose(A.T @ res.duals + res.reduced_costs, c, atol=1e-8)
    assert _dual_objective(m, res) == pytest.approx(res.objective, rel=1e-7, abs=1e-7)


def test_warm_start_after_bound_change(backend):
    rng = np.random.default_rng(7)
    m = random_mixed_model(rng, 0, 12, 8)
    lp = LPSolver(m, backend=backend)
    first = lp.solve()
    cold_iters = first.lp_iterations
    v = int(np.argmax(np.abs(first.point)))
    lb, ub = m.variables[v].lower, m.variables[v].upper
    mid = (lb + ub) / 2
    lp.set_var_bounds(v, lb, mid)
    warm = lp.solve()
    m.variables[v] = dataclasses.replace(m.variables[v], upper=mid)
    assert warm.objective == pytest.approx(highs_solve(m, integral=False), abs=1e-7)
    assert warm.lp_iterations <= cold_iters + 5


def test_snapshot_and_load_basis(backend):
    rng = np.random.default_rng(3)
    m = random_mixed_model(rng, 0, 15, 10)
    lp = LPSolver(m, backend=backend)
    res = lp.solve()
    basis = lp.snapshot()
    lp.set_var_bounds(0, m.variables[0].lower, m.variables[0].lower)
    lp.solve()
    lp.set_var_bounds(0, m.variables[0].lower, m.variables[0].upper)
    lp.load(basis)
    again = lp.solve()
    assert again.objective == pytest.approx(res.objective, abs=1e-9)
    assert again.lp_iterations == 0


def test_iteration_limit(backend):
    rng = np.random.default_rng(11)
    m = random_mixed_model(rng, 0, 30, 25)
    lp = LPSolver(m, backend=backend)
    lp.max_iterations = 1
    assert lp.solve().status is SolveStatus.ITER_LIMIT


def test_degenerate_assignment_lp(backend):
    # highly degenerate: many ties at the optimum
    n = 8
    m = LinearModel()
    x = [[m.add_variable(f"x{i}_{j}", 0, 1) for j in range(n)] for i in range(n)]
    for i in range(n):
        m.add_constraint(LinearExpr({x[i][j]: 1.0 for j in range(n)}), Sense.EQ, 1.0)
        m.add_constraint(LinearExpr({x[j][i]: 1.0 for j in range(n)}), Sense.EQ, 1.0)
    m.set_objective(LinearExpr({x[i][j]: float((i + j) % 3) for i in range(n) for j in range(n)}))
    res = solve_lp(m, backend=backend)
    assert res.objective == pytest.approx(highs_solve(m, integral=False), abs=1e-9)


def test_badly_scaled_lp(backend):
    m = LinearModel()
    a, b = m.add_variable("a", 0, 1e4), m.add_variable("b", 0, 1e-2)
    m.add_constraint(LinearExpr({a: 1e-3, b: 1e3}), Sense.LE, 5.0)
    m.set_objective(LinearExpr({a: 1.0, b: 1e4}), ObjSense.MAX)
    res = solve_lp(m, backend=backend)
    assert res.objective == pytest.approx(highs_solve(m, integral=False), rel=1e-9)


def test_scaling_off_gives_same_answer():
    rng = np.random.default_rng(5)
    m = random_mixed_model(rng, 0, 10, 8)
    assert solve_lp(m, scale=False).objective == pytest.approx(solve_lp(m).objective, abs=1e-8)


def test_result_to_dict_is_json_safe():
    m, x = _single(0, 1)
    m.add_constraint(LinearExpr({x: 1.0}), Sense.GE, 2.0)
    d = solve_lp(m).to_dict()
    assert d["status"] == "infeasible" and d["objective"] is None


def test_lp_gap_values():
    assert lp_gap(100.0, 97.0) == pytest.approx(3.0)
    assert lp_gap(50.0, 50.0) == 0.0
    assert math.isnan(lp_gap(0.0, -1.0))


# Published benchmark rows: n, MILP objective, gap (percent), both formulations.
REFERENCE_ROWS = [
    (100, 366.0, 3.1),
    (100, 365.58, 3.1),
]


@pytest.mark.parametrize("n, opt, gap", REFERENCE_ROWS)
def test_lp_gap_consistent_with_reference_rows(n, opt, gap):
    lb = opt * (1 - gap / 100)
    assert lp_gap(opt, lb) == pytest.approx(gap, abs=1e-9)
    # two decimals of the gap pin the root bound to within 0.05% of opt
    assert 0.96 * opt < lb < 0.97 * opt


@pytest.mark.parametrize("seed", range(20))
def test_complementary_slackness(seed):
    rng = np.random.default_rng(200 + seed)
    m = random_mixed_model(rng, 0, int(rng.integers(3, 20)), int(rng.integers(2, 15)))
    res = solve_lp(m)
    act = m.matrix() @ res.point
    lo, hi = m.row_bounds()
    lb, ub = m.bounds_arrays()
    for y, a, l, h in zip(res.duals, act, lo, hi):
        if abs(y) > 1e-6:
            assert abs(a - (l if y > 0 else h)) <= 1e-6
    for r, x, l, h in zip(res.reduced_costs, res.point, lb, ub):
        if abs(r) > 1e-6:
            assert abs(x - (l if r > 0 else h)) <= 1e-6
