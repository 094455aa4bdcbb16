"""Binary branch-and-bound on top of :class:`LPSolver`.

Node selection is best-bound with depth-first dives: after branching, the
child that fixes the branching variable to its nearest integer is solved
immediately from the parent's basis and the sibling goes on the heap. Ties
everywhere break toward the lowest index so runs are reproducible.
"""
from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..model import INT_TOL, LinearModel, ObjSense
from .simplex import Basis, LPSolver, SolveResult, SolveStatus

log = logging.getLogger(__name__)

DEFAULT_NODE_LIMIT = 100_000
REL_GAP = 1e-6


@dataclass
class _Node:
    bound: float
    node_id: int
    fixings: Tuple[Tuple[int, int], ...]
    basis: Optional[Basis]

    def key(self):
        return (self.bound, self.node_id)


def _most_fractional(point: np.ndarray, binaries: np.ndarray) -> Optional[int]:
    if binaries.size == 0:
        return None
    vals = point[binaries]
    frac = np.abs(vals - np.round(vals))
    worst = np.max(frac)
    if worst <= INT_TOL:
        return None
    # distance to 0.5; argmin picks the lowest id among ties
    dist = np.abs(vals - np.floor(vals) - 0.5)
    cand = np.flatnonzero(frac > INT_TOL)
    return int(binaries[cand[np.argmin(dist[cand])]])


def gap_closed(incumbent: float, bound: float, rel_gap: float = REL_GAP) -> bool:
    if not math.isfinite(incumbent):
        return False
    return incumbent - bound <= rel_gap * max(1.0, abs(incumbent))


def solve_milp(model: LinearModel, node_limit: int = DEFAULT_NODE_LIMIT, *, rel_gap: float = REL_GAP,
               backend: Optional[str] = None, lp: Optional[LPSolver] = None) -> SolveResult:
    """Minimize (or maximize) ``model`` with its binary variables integral.

    ``bound`` in the result is the best proven bound; ``objective`` is the
    incumbent. With ``NODE_LIMIT`` the incumbent may be absent (``nan``).
    """
    t0 = time.perf_counter()
    sign = -1.0 if model.sense is ObjSense.MAX else 1.0
    lp = lp or LPSolver(model, backend=backend)
    base_lb = lp.var_lb.copy()
    base_ub = lp.var_ub.copy()
    binaries = np.array(model.binary_ids(), dtype=np.int64)

    incumbent = math.inf
    best_point: Optional[np.ndarray] = None
    iterations = 0
    nodes = 0
    heap: List[Tuple[Tuple[float, int], _Node]] = []
    next_id = 0
    current: Dict[int, int] = {}

    def apply(fixings):
        for vid in list(current):
            if vid not in dict(fixings):
                lp.set_var_bounds(vid, base_lb[vid], base_ub[vid])
                del current[vid]
        for vid, val in fixings:
            if current.get(vid) != val:
                lp.set_var_bounds(vid, float(val), float(val))
                current[vid] = val

    root = _Node(-math.inf, next_id, (), None)
    next_id += 1
    pending: Optional[_Node] = root
    open_bound = -math.inf
    status = SolveStatus.OPTIMAL
    root_unbounded = False

    while True:
        if pending is None:
            while heap and heap[0][1].bound >= incumbent - rel_gap * max(1.0, abs(incumbent)):
                heapq.heappop(heap)  # pruned by bound
            if not heap:
                break
            pending = heapq.heappop(heap)[1]
            lp.load(pending.basis)
        node = pending
        pending = None
        if nodes >= node_limit:
            heapq.heappush(heap, (node.key(), node))
            status = SolveStatus.NODE_LIMIT
            break
        nodes += 1
        apply(node.fixings)
        res = lp.solve()
        iterations += res.lp_iterations
        if res.status is SolveStatus.INFEASIBLE:
            continue
        if res.status is SolveStatus.UNBOUNDED:
            if nodes == 1:
                root_unbounded = True
                break
            continue
        if res.status is not SolveStatus.OPTIMAL:
            log.warning("node %d LP ended with %s; node dropped", node.node_id, res.status.value)
            continue
        value = sign * res.objective
        if value >= incumbent - rel_gap * max(1.0, abs(incumbent)):
            continue
        branch = _most_fractional(res.point, binaries)
        if branch is None:
            incumbent = value
            best_point = res.point.copy()
            log.debug("incumbent %.10g at node %d", sign * incumbent, nodes)
            continue
        v = res.point[branch]
        near = 1 if v >= 0.5 else 0
        basis = lp.snapshot()
        far_node = _Node(value, next_id, node.fixings + ((branch, 1 - near),), basis)
        near_node = _Node(value, next_id + 1, node.fixings + ((branch, near),), basis)
        next_id += 2
        heapq.heappush(heap, (far_node.key(), far_node))
        pending = near_node

    apply(())
    elapsed = time.perf_counter() - t0
    if root_unbounded:
        return SolveResult(SolveStatus.UNBOUNDED, lp_iterations=iterations, bb_nodes=nodes, wall_time=elapsed)
    open_bound = min([n.bound for _, n in heap], default=math.inf)
    if status is SolveStatus.NODE_LIMIT:
        bound = min(open_bound, incumbent)
        if best_point is not None and gap_closed(incumbent, bound, rel_gap):
            status = SolveStatus.OPTIMAL
    else:
        bound = incumbent
    if best_point is None:
        if status is SolveStatus.NODE_LIMIT:
            return SolveResult(SolveStatus.NODE_LIMIT, bound=sign * bound, lp_iterations=iterations,
                               bb_nodes=nodes, wall_time=elapsed)
        return SolveResult(SolveStatus.INFEASIBLE, lp_iterations=iterations, bb_nodes=nodes, wall_time=elapsed)
    return SolveResult(
        status,
        objective=sign * incumbent,
        point=best_point,
        lp_iterations=iterations,
        bb_nodes=nodes,
        wall_time=elapsed,
        bound=sign * bound,
    )


def lp_gap(opt: float, lb: float) -> float:
    """Percent gap ``(opt - lb) / opt * 100``; ``nan`` when ``opt == 0``."""
    if opt == 0:
        return math.nan
    return (opt - lb) / opt * 100.0
