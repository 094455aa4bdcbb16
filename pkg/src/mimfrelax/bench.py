"""Benchmark family: minimize a linear cost subject to a sum of sliding
``2k``-linear mixed-integer terms reaching a demand.

    min  sum_i c_i x_i + d_i z_i
    s.t. sum_{t=0}^{n-k} prod_{j=t}^{t+k-1} x_j z_j >= D
         l <= x <= u = 10 l,  z binary

Each product is replaced by the lifted variable of one term relaxation, which
turns the problem into a MILP whose optimum bounds the original from below.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .model import LinearExpr, LinearModel, ObjSense, Sense, VarKind
from .relaxations import Formulation, MimfTerm, RelaxationHandle, build
from .rng import XorShift64Star
from .solver import DEFAULT_NODE_LIMIT, LPSolver, SolveStatus, lp_gap, solve_milp

log = logging.getLogger(__name__)

FORMULATION_LABELS = {Formulation.FLAMBDA: "F^lambda", Formulation.FRMC: "F^rmc"}


class EmptyReport(ValueError):
    pass


class MonotonicityError(AssertionError):
    pass


@dataclass
class Instance:
    n: int
    k: int
    c: List[float]
    d: List[float]
    lower: List[float]
    upper: List[float]
    demand: float
    seed: int

    def __post_init__(self) -> None:
        if not (self.n >= self.k >= 1):
            raise ValueError(f"need n >= k >= 1, got n={self.n}, k={self.k}")
        for name in ("c", "d", "lower", "upper"):
            if len(getattr(self, name)) != self.n:
                raise ValueError(f"{name} must have length n={self.n}")

    @property
    def num_terms(self) -> int:
        return self.n - self.k + 1

    def windows(self) -> List[range]:
        return [range(t, t + self.k) for t in range(self.num_terms)]

    def objective(self, x: Sequence[float], z: Sequence[float]) -> float:
        return sum(ci * xi + di * zi for ci, xi, di, zi in zip(self.c, x, self.d, z))

    def constraint_value(self, x: Sequence[float], z: Sequence[float]) -> float:
        total = 0.0
        for w in self.windows():
            prod = 1.0
            for j in w:
                prod *= x[j] * z[j]
            total += prod
        return total


def generate_instance(n: int, k: int, seed: int, demand_factor: float = 0.7) -> Instance:
    """Draw ``c``, ``d`` and ``l`` (in that order) from the seeded stream."""
    if not (n >= k >= 1):
        raise ValueError(f"need n >= k >= 1, got n={n}, k={k}")
    rng = XorShift64Star(seed)
    c = rng.uniforms(n)
    d = rng.uniforms(n)
    lower = rng.uniforms(n)
    upper = [10.0 * v for v in lower]
    return Instance(n, k, c, d, lower, upper, demand_factor * n, int(seed))


@dataclass
class RelaxedMilp:
    model: LinearModel
    x: List[int]
    z: List[int]
    handles: List[RelaxationHandle]
    demand_row: int


def build_relaxed_milp(instance: Instance, formulation: Formulation) -> RelaxedMilp:
    formulation = Formulation(formulation)
    model = LinearModel(name=f"mimf_n{instance.n}_k{instance.k}_s{instance.seed}_{formulation.value}")
    x = [model.add_variable(f"x_{i}", instance.lower[i], instance.upper[i]) for i in range(instance.n)]
    z = [model.add_variable(f"z_{i}", 0.0, 1.0, VarKind.BINARY) for i in range(instance.n)]
    handles = []
    for w in instance.windows():
        term = MimfTerm(tuple(x[j] for j in w), tuple(z[j] for j in w),
                        tuple((instance.lower[j], instance.upper[j]) for j in w))
        handles.append(build(model, term, formulation))
    demand_row = model.add_constraint(
        LinearExpr({h.phi_hat: 1.0 for h in handles}), Sense.GE, instance.demand, name="demand"
    )
    obj = LinearExpr.from_pairs([(x[i], instance.c[i]) for i in range(instance.n)]
                                + [(z[i], instance.d[i]) for i in range(instance.n)])
    model.set_objective(obj, ObjSense.MIN)
    return RelaxedMilp(model, x, z, handles, demand_row)


@dataclass
class BenchRow:
    n: int
    k: int
    seed: int
    formulation: str
    milp_objective: float
    lp_bound: float
    lp_gap_percent: float
    lp_time: float
    milp_time: float
    bb_nodes: int
    status: str = "optimal"


TABLE_COLUMNS = [f.name for f in fields(BenchRow)]


def run_single(n: int, k: int, seed: int, formulation: Formulation, *,
               node_limit: int = DEFAULT_NODE_LIMIT, rel_gap: float = 1e-6,
               demand_factor: float = 0.7, backend: Optional[str] = None) -> BenchRow:
    formulation = Formulation(formulation)
    inst = generate_instance(n, k, seed, demand_factor)
    relaxed = build_relaxed_milp(inst, formulation)
    lp = LPSolver(relaxed.model, backend=backend)
    root = lp.solve()
    if root.status is not SolveStatus.OPTIMAL:
        raise RuntimeError(f"root LP for n={n} k={k} seed={seed} ended {root.status.value}")
    res = solve_milp(relaxed.model, node_limit, rel_gap=rel_gap, lp=lp)
    if res.status is SolveStatus.OPTIMAL and root.objective > res.objective + 1e-6 * max(1.0, abs(res.objective)):
        raise MonotonicityError(
            f"root LP bound {root.objective} exceeds MILP optimum {res.objective} (n={n}, seed={seed})"
        )
    milp_obj = res.objective if math.isfinite(res.objective) else math.nan
    return BenchRow(
        n=n, k=k, seed=seed, formulation=FORMULATION_LABELS[formulation],
        milp_objective=milp_obj,
        lp_bound=root.objective,
        lp_gap_percent=lp_gap(milp_obj, root.objective) if math.isfinite(milp_obj) else math.nan,
        lp_time=root.wall_time,
        milp_time=res.wall_time,
        bb_nodes=res.bb_nodes,
        status=res.status.value,
    )


def _run_args(args):
    n, k, seed, form, kwargs = args
    return run_single(n, k, seed, form, **kwargs)


def run_experiment(n_list: Iterable[int], k: int, seeds: Iterable[int],
                   formulations: Iterable[Formulation] = (Formulation.FLAMBDA, Formulation.FRMC), *,
                   workers: int = 1, **kwargs) -> List[BenchRow]:
    """One row per ``(n, seed, formulation)``, sorted in that order."""
    jobs = [(n, k, s, Formulation(f), kwargs) for n in n_list for s in seeds for f in formulations]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_run_args, jobs))
    else:
        rows = [_run_args(j) for j in jobs]
    rows.sort(key=lambda r: (r.n, r.seed, r.formulation))
    return rows


def _median(values):
    vals = [v for v in values if not (isinstance(v, float) and math.isnan(v))]
    return statistics.median(vals) if vals else math.nan


def aggregate(rows: Sequence[BenchRow]) -> List[BenchRow]:
    """Median across seeds for every ``(n, k, formulation)``; seed is set to -1."""
    groups: Dict[Tuple[int, int, str], List[BenchRow]] = {}
    for r in rows:
        groups.setdefault((r.n, r.k, r.formulation), []).append(r)
    out = []
    for (n, k, form), grp in sorted(groups.items()):
        statuses = {r.status for r in grp}
        out.append(BenchRow(
            n=n, k=k, seed=-1, formulation=form,
            milp_objective=_median(r.milp_objective for r in grp),
            lp_bound=_median(r.lp_bound for r in grp),
            lp_gap_percent=_median(r.lp_gap_percent for r in grp),
            lp_time=_median(r.lp_time for r in grp),
            milp_time=_median(r.milp_time for r in grp),
            bb_nodes=int(_median(r.bb_nodes for r in grp)),
            status=statuses.pop() if len(statuses) == 1 else "mixed",
        ))
    return out


def _fmt(name: str, value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.1f}" if name == "lp_gap_percent" else f"{value:.4g}"
    return str(value)


def emit_table(rows: Sequence[BenchRow], fmt: str = "csv") -> str:
    if not rows:
        raise EmptyReport("no benchmark rows to report")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        for r in rows:
            writer.writerow([_fmt(c, getattr(r, c)) for c in TABLE_COLUMNS])
        return buf.getvalue()
    if fmt == "markdown":
        return _markdown(rows)
    raise ValueError(f"unknown table format {fmt!r}")


def _markdown(rows: Sequence[BenchRow]) -> str:
    forms = sorted({r.formulation for r in rows}, key=lambda f: (f != "F^lambda", f))
    by_n: Dict[int, Dict[str, BenchRow]] = {}
    for r in aggregate(rows) if any(r.seed >= 0 for r in rows) else rows:
        by_n.setdefault(r.n, {})[r.formulation] = r
    metrics = [("MILP obj.", "milp_objective"), ("LP gap (%)", "lp_gap_percent"),
               ("LP time (s)", "lp_time"), ("MILP time (s)", "milp_time")]
    header = ["n"] + [f"{label} {f}" for label, _ in metrics for f in forms]
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for n in sorted(by_n):
        cells = [str(n)]
        for _, attr in metrics:
            for f in forms:
                r = by_n[n].get(f)
                cells.append(_fmt(attr, getattr(r, attr)) if r else "")
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def rows_to_dicts(rows: Sequence[BenchRow]) -> List[dict]:
    return [asdict(r) for r in rows]
