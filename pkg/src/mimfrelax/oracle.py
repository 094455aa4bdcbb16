"""Brute-force ground truth for the term relaxations.

Everything here is deliberately simple: the graph of a term is enumerated
vertex by vertex, convex-hull membership is a small LP, and the two-disjunct
decompositions are written out coordinate by coordinate so they can be
checked against the builders rather than derived from them.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .model import FEAS_TOL, DimensionMismatch, LinearExpr, LinearModel, ObjSense, Sense, VarKind
from .relaxations import (
    Formulation,
    MimfTerm,
    RelaxationError,
    RelaxationHandle,
    build,
    enumerate_extreme_points,
)
from .solver import LPSolver, SolveStatus

MAX_GRAPH_VARS = 16
MAX_PROBE_VARS = 10
MEMBERSHIP_TOL = 1e-7


class OracleError(ValueError):
    pass


class DecompositionError(OracleError):
    """A decomposition produced a part outside its disjunct."""


@dataclass(frozen=True)
class GraphVertex:
    x: Tuple[float, ...]
    z: Tuple[int, ...]
    phi: float

    def coordinates(self) -> np.ndarray:
        return np.array(self.x + tuple(float(v) for v in self.z) + (self.phi,))


def graph_vertices(term: MimfTerm) -> List[GraphVertex]:
    """Every box corner paired with every binary assignment.

    Corners follow the extreme-point order of the builders and the binary
    part counts with the first binary as least-significant bit; corners vary
    fastest.
    """
    nI, nJ = term.shape
    if nI + nJ > MAX_GRAPH_VARS:
        raise OracleError(f"graph of a term with {nI + nJ} variables is too large to enumerate")
    corners = enumerate_extreme_points(term.bounds) if nI else []
    out = []
    for bits in range(1 << nJ):
        z = tuple((bits >> j) & 1 for j in range(nJ))
        on = all(z)
        if nI:
            for c in corners:
                out.append(GraphVertex(c.coordinates, z, c.product_value if on else 0.0))
        else:
            out.append(GraphVertex((), z, 1.0 if on else 0.0))
    return out


def _vertex_matrix(vertices) -> np.ndarray:
    if len(vertices) == 0:
        raise OracleError("vertex list is empty")
    if isinstance(vertices[0], GraphVertex):
        return np.array([v.coordinates() for v in vertices])
    return np.atleast_2d(np.asarray(vertices, dtype=float))


def hull_distance(point: Sequence[float], vertices) -> float:
    """Smallest infinity-norm slack ``s`` with ``point`` within ``s`` of conv(vertices)."""
    V = _vertex_matrix(vertices)
    p = np.asarray(point, dtype=float)
    if p.shape != (V.shape[1],):
        raise DimensionMismatch(f"point has dimension {p.size}, vertices have {V.shape[1]}")
    m = LinearModel(name="membership")
    mu = [m.add_variable(f"mu_{k}", 0.0, 1.0) for k in range(V.shape[0])]
    s = m.add_variable("slack", 0.0, math.inf)
    m.add_constraint(LinearExpr({k: 1.0 for k in mu}), Sense.EQ, 1.0, "convex")
    for i in range(V.shape[1]):
        hull = {k: V[k, i] for k in mu if V[k, i] != 0.0}
        m.add_constraint(LinearExpr({**hull, s: 1.0}), Sense.GE, p[i], f"lo_{i}")
        m.add_constraint(LinearExpr({**hull, s: -1.0}), Sense.LE, p[i], f"hi_{i}")
    m.set_objective(LinearExpr.var(s), ObjSense.MIN)
    res = LPSolver(m).solve()
    if res.status is not SolveStatus.OPTIMAL:
        raise OracleError(f"membership LP ended {res.status.value}")
    return max(res.objective, 0.0)


def membership_in_conv(point: Sequence[float], vertices, tolerance: float = MEMBERSHIP_TOL) -> bool:
    return hull_distance(point, vertices) <= tolerance


# -- term models ---------------------------------------------------------------

@dataclass
class TermModel:
    """A term relaxation in a model of its own, binaries relaxed to ``[0, 1]``."""
    model: LinearModel
    term: MimfTerm
    handle: RelaxationHandle

    @property
    def x(self) -> Tuple[int, ...]:
        return self.term.continuous

    @property
    def z(self) -> Tuple[int, ...]:
        return self.term.binary

    def original_ids(self) -> List[int]:
        return list(self.x) + list(self.z) + [self.handle.phi_hat]


def term_model(term: MimfTerm, formulation: Formulation = Formulation.FLAMBDA,
               relax_binaries: bool = True) -> TermModel:
    model = LinearModel(name=f"term_{term.shape[0]}x{term.shape[1]}")
    kind = VarKind.CONTINUOUS if relax_binaries else VarKind.BINARY
    xs = tuple(model.add_variable(f"x_{i}", lo, hi) for i, (lo, hi) in enumerate(term.bounds))
    zs = tuple(model.add_variable(f"z_{j}", 0.0, 1.0, kind) for j in range(len(term.binary)))
    local = MimfTerm(xs, zs, term.bounds)
    return TermModel(model, local, build(model, local, formulation))


def random_term(n_continuous: int, n_binary: int, seed: int = 0) -> MimfTerm:
    """Term over ids ``0..|I|+|J|-1`` with positive random bounds, ``u > l``."""
    if n_continuous < 0 or n_binary < 0 or n_continuous + n_binary == 0:
        raise RelaxationError(f"invalid term shape ({n_continuous}, {n_binary})")
    rng = np.random.default_rng(seed)
    lo = rng.uniform(0.1, 1.0, n_continuous)
    hi = lo + rng.uniform(0.5, 3.0, n_continuous)
    return MimfTerm(tuple(range(n_continuous)), tuple(range(n_continuous, n_continuous + n_binary)),
                    tuple((float(a), float(b)) for a, b in zip(lo, hi)))


def lift_vertex(tm: TermModel, vertex: GraphVertex) -> np.ndarray:
    """Full model point for a graph vertex, built from the vertex alone.

    The binary part is switched on through ``zhat = prod(z)``; in the
    extreme-point formulations the weight sits on the vertex's corner, and
    in the chained formulation every intermediate variable takes the exact
    partial product.
    """
    h = tm.handle
    point = np.zeros(tm.model.num_vars)
    point[list(tm.x)] = vertex.x
    point[list(tm.z)] = vertex.z
    on = float(all(vertex.z))
    if h.z_hat is not None:
        point[h.z_hat] = on
    if h.lambdas:
        k = sum(1 << i for i, (xi, (lo, hi)) in enumerate(zip(vertex.x, tm.term.bounds))
                if xi == hi and hi != lo)
        point[h.lambdas[k]] = 1.0 if h.z_hat is None else on
    prod = vertex.x[0] if vertex.x else 1.0
    for t, w in enumerate(h.chain):
        prod *= vertex.x[t + 1]
        point[w] = prod
    if h.factors and h.xz_lifted:
        for f, v in zip(h.factors, h.xz_lifted):
            point[v] = point[f] * on
    point[h.phi_hat] = vertex.phi
    return point


# -- decompositions ------------------------------------------------------------

@dataclass
class HullPoint:
    """Coordinates of one point of a term relaxation.

    ``factors`` are the two (or one) effective factors of the chained form;
    for ``|I| <= 2`` they are the continuous variables themselves.
    """
    x: np.ndarray
    z: np.ndarray
    z_hat: float
    phi: float
    lambdas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    xz: np.ndarray = field(default_factory=lambda: np.zeros(0))
    factors: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def from_solution(cls, handle: RelaxationHandle, values: Sequence[float]) -> "HullPoint":
        v = np.asarray(values, dtype=float)
        term = handle.term
        return cls(
            x=v[list(term.continuous)],
            z=v[list(term.binary)],
            z_hat=float(v[handle.z_hat]) if handle.z_hat is not None else 1.0,
            phi=float(v[handle.phi_hat]),
            lambdas=v[handle.lambdas] if handle.lambdas else np.zeros(0),
            xz=v[handle.xz_lifted] if handle.xz_lifted else np.zeros(0),
            factors=v[handle.factors] if handle.factors else np.zeros(0),
        )

    def vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.z, [self.z_hat, self.phi], self.lambdas, self.xz, self.factors])


@dataclass
class Decomposition:
    """``point = (1 - weight) * off + weight * on``; a side is ``None`` when its weight is zero."""
    off: Optional[HullPoint]
    on: Optional[HullPoint]
    weight: float

    def recombine(self) -> np.ndarray:
        parts = []
        if self.off is not None:
            parts.append((1.0 - self.weight) * self.off.vector())
        if self.on is not None:
            parts.append(self.weight * self.on.vector())
        return np.sum(parts, axis=0)

    def residual(self, point: HullPoint) -> float:
        return float(np.max(np.abs(self.recombine() - point.vector()), initial=0.0))


def _violation(*pairs) -> float:
    """Largest amount by which ``lo <= v <= hi`` fails over the given triples."""
    worst = 0.0
    for v, lo, hi in pairs:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        worst = max(worst, float(np.max(np.maximum(np.asarray(lo) - v, v - np.asarray(hi)), initial=0.0)))
    return worst


def _scaled_tol(tol: float, *values) -> float:
    return tol * max([1.0] + [float(np.max(np.abs(v), initial=0.0)) for v in values])


def _off_violation(p: HullPoint, lo, hi) -> float:
    """Distance of ``p`` from the off disjunct: ``zhat = 0``, nothing lifted, x in its box."""
    nJ = p.z.size
    return max(
        abs(p.z_hat), abs(p.phi),
        float(np.max(np.abs(p.lambdas), initial=0.0)),
        float(np.max(np.abs(p.xz), initial=0.0)),
        _violation((p.x, lo, hi), (p.z, 0.0, 1.0), (np.sum(p.z), -np.inf, nJ - 1)),
    )


def flambda_disjunct_violation(p: HullPoint, term: MimfTerm, on: bool) -> float:
    """How far ``p`` is from the off (``on=False``) or on disjunct of the extreme-point form."""
    lo, hi = np.array(term.bounds, dtype=float).T
    if not on:
        return _off_violation(p, lo, hi)
    pts = enumerate_extreme_points(term.bounds)
    xi = np.array([e.coordinates for e in pts])
    prod = np.array([e.product_value for e in pts])
    return max(
        abs(p.z_hat - 1.0),
        float(np.max(np.abs(p.z - 1.0), initial=0.0)),
        _violation((p.lambdas, 0.0, np.inf)),
        abs(float(np.sum(p.lambdas)) - 1.0),
        float(np.max(np.abs(p.x - p.lambdas @ xi), initial=0.0)),
        abs(p.phi - float(p.lambdas @ prod)),
    )


def decompose_theorem1(point: HullPoint, term: MimfTerm, tol: float = 1e-7) -> Decomposition:
    """Split a point of the extreme-point relaxation into its two disjuncts.

    With weight ``zhat``::

        off = ((x - sum(lambda xi)) / (1 - zhat), z', 0, 0, 0),  z' = (z - zhat) / (1 - zhat)
        on  = (sum(lambda xi) / zhat, 1, 1, phi / zhat, lambda / zhat)

    Raises :class:`DecompositionError` if either part leaves its disjunct,
    which happens exactly when the input violates the relaxation's rows.
    """
    if point.lambdas.size != 1 << point.x.size:
        raise DimensionMismatch("point does not carry one weight per box corner")
    zh = point.z_hat
    lo, hi = np.array(term.bounds, dtype=float).T
    if zh <= 0.0 or zh >= 1.0:
        on = zh >= 1.0
        dec = Decomposition(None, point, 1.0) if on else Decomposition(point, None, 0.0)
        part = point
        viol = flambda_disjunct_violation(part, term, on)
        if viol > _scaled_tol(tol, hi, point.phi):
            raise DecompositionError(f"point with zhat={zh} is {viol:.3g} outside its disjunct")
        return dec
    xi = np.array([e.coordinates for e in enumerate_extreme_points(term.bounds)])
    corner_mix = point.lambdas @ xi
    off = HullPoint(
        x=(point.x - corner_mix) / (1.0 - zh),
        z=(point.z - zh) / (1.0 - zh),
        z_hat=0.0, phi=0.0,
        lambdas=np.zeros_like(point.lambdas),
    )
    on = HullPoint(
        x=corner_mix / zh,
        z=np.ones_like(point.z),
        z_hat=1.0, phi=point.phi / zh,
        lambdas=point.lambdas / zh,
    )
    for part, flag, w in ((off, False, 1.0 - zh), (on, True, zh)):
        viol = flambda_disjunct_violation(part, term, flag)
        if viol > _scaled_tol(tol, hi, point.phi) / w:
            side = "on" if flag else "off"
            raise DecompositionError(f"{side} part lies {viol:.3g} outside its disjunct")
    return Decomposition(off, on, zh)


def frmc_disjunct_violation(p: HullPoint, factor_bounds: Sequence[Tuple[float, float]], nJ: int,
                            on: bool) -> float:
    """Distance from the off/on disjunct of the chained form, in effective-factor space."""
    lo, hi = np.array(factor_bounds, dtype=float).T
    if not on:
        return max(abs(p.z_hat), abs(p.phi), float(np.max(np.abs(p.xz), initial=0.0)),
                   _violation((p.factors, lo, hi), (p.z, 0.0, 1.0), (np.sum(p.z), -np.inf, nJ - 1)))
    viol = max(
        abs(p.z_hat - 1.0),
        float(np.max(np.abs(p.z - 1.0), initial=0.0)),
        float(np.max(np.abs(p.xz - p.factors), initial=0.0)),
        _violation((p.factors, lo, hi)),
    )
    if p.factors.size == 1:
        return max(viol, abs(p.phi - p.xz[0]))
    (l1, u1), (l2, u2) = factor_bounds
    a, b = p.xz
    env_lo = max(u2 * a + u1 * b - u1 * u2, l2 * a + l1 * b - l1 * l2)
    env_hi = min(u2 * a + l1 * b - l1 * u2, l2 * a + u1 * b - u1 * l2)
    return max(viol, env_lo - p.phi, p.phi - env_hi)


def decompose_theorem2(point: HullPoint, factor_bounds: Sequence[Tuple[float, float]],
                       tol: float = 1e-7) -> Decomposition:
    """Split a point of the chained relaxation into its two disjuncts.

    Works on the effective factors ``f`` (chain product and last variable)
    and their lifted copies ``xz``::

        on  = (f = xz / zhat, xz / zhat, phi / zhat, z = 1, zhat = 1)
        off = (f = (f - xz) / (1 - zhat), 0, 0, z', 0)

    The chain rows tie ``f`` to the original variables without involving
    ``zhat``, so they are shared by both parts and left out here.
    """
    if point.xz.size != point.factors.size or point.xz.size not in (1, 2):
        raise DimensionMismatch("point needs one or two factors with matching lifted copies")
    if len(factor_bounds) != point.factors.size:
        raise DimensionMismatch("one bound pair per factor expected")
    nJ = point.z.size
    zh = point.z_hat
    scale = _scaled_tol(tol, np.array(factor_bounds), point.phi)
    if zh <= 0.0 or zh >= 1.0:
        on = zh >= 1.0
        viol = frmc_disjunct_violation(point, factor_bounds, nJ, on)
        if viol > scale:
            raise DecompositionError(f"point with zhat={zh} is {viol:.3g} outside its disjunct")
        return Decomposition(None, point, 1.0) if on else Decomposition(point, None, 0.0)
    empty = np.zeros(0)
    on = HullPoint(x=empty, z=np.ones_like(point.z), z_hat=1.0, phi=point.phi / zh,
                   xz=point.xz / zh, factors=point.xz / zh)
    off = HullPoint(x=empty, z=(point.z - zh) / (1.0 - zh), z_hat=0.0, phi=0.0,
                    xz=np.zeros_like(point.xz), factors=(point.factors - point.xz) / (1.0 - zh))
    for part, flag, w in ((off, False, 1.0 - zh), (on, True, zh)):
        viol = frmc_disjunct_violation(part, factor_bounds, nJ, flag)
        if viol > scale / w:
            side = "on" if flag else "off"
            raise DecompositionError(f"{side} part lies {viol:.3g} outside its disjunct")
    return Decomposition(off, on, zh)


def factor_space_point(point: HullPoint) -> HullPoint:
    """Drop the original continuous values, keeping what :func:`decompose_theorem2` sees."""
    return HullPoint(x=np.zeros(0), z=point.z, z_hat=point.z_hat, phi=point.phi,
                     xz=point.xz, factors=point.factors)


def sample_fractional_points(tm: TermModel, count: int, seed: int = 0,
                             zhat_range: Tuple[float, float] = (0.05, 0.95)) -> List[np.ndarray]:
    """Feasible points with ``zhat`` fixed to random fractional values.

    Each point is an optimal vertex of the relaxation sliced at that
    ``zhat`` for a random objective, so it sits on the boundary where the
    decompositions are tightest.
    """
    h = tm.handle
    if h.z_hat is None or h.z_hat == h.phi_hat:
        raise OracleError("term has no separate on/off indicator to fix")
    rng = np.random.default_rng(seed)
    lp = LPSolver(tm.model)
    lb, ub = lp.var_lb.copy(), lp.var_ub.copy()
    out = []
    while len(out) < count:
        t = float(rng.uniform(*zhat_range))
        lp.set_all_var_bounds(lb, ub)
        lp.set_var_bounds(h.z_hat, t, t)
        lp.set_objective(rng.standard_normal(tm.model.num_vars))
        res = lp.solve()
        if res.status is SolveStatus.OPTIMAL:
            out.append(res.point)
    return out


# -- projection probe ----------------------------------------------------------

@dataclass
class ProjectionReport:
    shape: Tuple[int, int]
    formulation: str
    directions_tested: int
    counterexamples: List[dict]
    max_residual: float
    vertices: int
    vertices_lifted: int
    tolerance: float
    seed: int

    @property
    def liftability(self) -> float:
        return self.vertices_lifted / self.vertices if self.vertices else 1.0

    @property
    def holds(self) -> bool:
        return not self.counterexamples and self.vertices_lifted == self.vertices

    def to_dict(self) -> dict:
        d = asdict(self)
        d["shape"] = list(self.shape)
        d["liftability"] = self.liftability
        d["holds"] = self.holds
        d["evidence_only"] = True
        return d

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def unit_directions(count: int, dim: int, seed: int = 0) -> np.ndarray:
    """``count`` directions uniform on the unit sphere in ``dim`` dimensions."""
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((count, dim))
    norms = np.linalg.norm(d, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return d / norms


def check_projection_conjecture(term: MimfTerm, directions: int = 200, seed: int = 0,
                                formulation: Formulation = Formulation.FLAMBDA,
                                tolerance: float = MEMBERSHIP_TOL) -> ProjectionReport:
    """Probe whether the relaxation projects onto the convex hull of the term's graph.

    Each random direction over ``(x, z, phi)`` is maximized over the
    relaxation with binaries relaxed, and the optimum's projection is tested
    for membership in the hull of :func:`graph_vertices`. Every graph vertex
    is also lifted to a full point and checked against the rows. A failed
    membership is a genuine counterexample; none found is evidence only.
    """
    nI, nJ = term.shape
    if nI + nJ > MAX_PROBE_VARS:
        raise OracleError(f"term with {nI + nJ} variables exceeds the probe limit of {MAX_PROBE_VARS}")
    if directions < 1:
        raise OracleError("at least one direction is required")
    tm = term_model(term, formulation)
    verts = graph_vertices(tm.term)
    V = _vertex_matrix(verts)
    lifted = sum(1 for v in verts if tm.model.evaluate(lift_vertex(tm, v), tolerance).feasible)

    ids = tm.original_ids()
    lp = LPSolver(tm.model)
    counter = []
    worst = 0.0
    for k, direction in enumerate(unit_directions(directions, len(ids), seed)):
        c = np.zeros(tm.model.num_vars)
        np.add.at(c, ids, direction)
        lp.set_objective(c, ObjSense.MAX)
        res = lp.solve()
        if res.status is not SolveStatus.OPTIMAL:
            raise OracleError(f"direction {k} ended {res.status.value}")
        proj = res.point[ids]
        dist = hull_distance(proj, V)
        worst = max(worst, dist)
        if dist > tolerance:
            counter.append({"direction": direction.tolist(), "point": proj.tolist(), "distance": dist})
    return ProjectionReport((nI, nJ), Formulation(formulation).value, directions, counter, worst,
                            len(verts), lifted, tolerance, seed)
