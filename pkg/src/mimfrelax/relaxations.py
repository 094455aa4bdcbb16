"""Polyhedral relaxations of mixed-integer multilinear terms.

A term is ``prod(x_i for i in I) * prod(z_j for j in J)`` with boxed
continuous ``x`` and binary ``z``. Each builder appends variables and rows to
a :class:`~mimfrelax.model.LinearModel` and returns a
:class:`RelaxationHandle` naming the auxiliary variables it introduced.

Builders:

* :func:`mccormick_bilinear` -- four-inequality envelope of ``x1 * x2``.
* :func:`fortet_binary_product` -- exact linearization of ``prod(z)``.
* :func:`lambda_formulation` -- extreme-point (convex multiplier) hull of
  ``prod(x)`` over the box.
* :func:`build_f_lambda` -- disjunctive hull between the off state
  (product is zero) and the on state (lambda hull, all binaries one).
* :func:`build_f_rmc` -- the same disjunction on top of a recursive
  McCormick chain, with lifted ``xz`` copies of the two remaining factors.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .model import LinearExpr, LinearModel, ModelError, Sense, VarKind

Bounds = Tuple[float, float]

MAX_EXTREME_DIM = 30


class RelaxationError(ModelError):
    pass


class Formulation(enum.Enum):
    MC = "mc"
    FORTET = "fortet"
    LAMBDA = "lambda"
    FLAMBDA = "flambda"
    FRMC = "frmc"


@dataclass(frozen=True)
class MimfTerm:
    continuous: Tuple[int, ...]
    binary: Tuple[int, ...]
    bounds: Tuple[Bounds, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "continuous", tuple(int(v) for v in self.continuous))
        object.__setattr__(self, "binary", tuple(int(v) for v in self.binary))
        object.__setattr__(self, "bounds", tuple((float(lo), float(hi)) for lo, hi in self.bounds))
        if len(self.bounds) != len(self.continuous):
            raise RelaxationError("one (lower, upper) pair is required per continuous variable")
        if not self.continuous and not self.binary:
            raise RelaxationError("term has no variables")
        if len(set(self.continuous)) != len(self.continuous) or len(set(self.binary)) != len(self.binary):
            raise RelaxationError("duplicate variable in term")
        for lo, hi in self.bounds:
            if lo > hi:
                raise RelaxationError(f"reversed bounds ({lo}, {hi})")

    @classmethod
    def from_model(cls, model: LinearModel, continuous: Sequence[int], binary: Sequence[int]) -> "MimfTerm":
        bounds = tuple((model.variables[v].lower, model.variables[v].upper) for v in continuous)
        return cls(tuple(continuous), tuple(binary), bounds)

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.continuous), len(self.binary)


@dataclass(frozen=True)
class ExtremePoint:
    coordinates: Tuple[float, ...]
    product_value: float


@dataclass
class RelaxationHandle:
    phi_hat: int
    formulation: Formulation
    z_hat: Optional[int] = None
    lambdas: List[int] = field(default_factory=list)
    xz_lifted: List[int] = field(default_factory=list)
    # factors paired with xz_lifted (after chaining) and their bounds
    factors: List[int] = field(default_factory=list)
    factor_bounds: List[Bounds] = field(default_factory=list)
    chain: List[int] = field(default_factory=list)
    extreme_points: List[ExtremePoint] = field(default_factory=list)
    rows: List[int] = field(default_factory=list)
    term: Optional[MimfTerm] = None


def _finite(bounds: Sequence[Bounds]) -> None:
    for lo, hi in bounds:
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise RelaxationError(f"infinite bounds ({lo}, {hi}) cannot be relaxed")


def interval_product_bounds(bounds: Sequence[Bounds]) -> Bounds:
    """Range of ``prod(x)`` over a box, folded pairwise left to right."""
    _finite(bounds)
    lo, hi = 1.0, 1.0
    for a, b in bounds:
        corners = (lo * a, lo * b, hi * a, hi * b)
        lo, hi = min(corners), max(corners)
    return lo, hi


def enumerate_extreme_points(bounds: Sequence[Bounds]) -> List[ExtremePoint]:
    """Box corners in binary-counting order.

    Bit ``i`` of the corner index selects the upper bound of variable ``i``;
    the first variable is the least significant bit. Degenerate boxes keep
    their duplicate corners.
    """
    dim = len(bounds)
    if dim < 1:
        raise RelaxationError("need at least one continuous variable")
    if dim > MAX_EXTREME_DIM:
        raise RelaxationError(f"{dim} variables give 2**{dim} corners; limit is {MAX_EXTREME_DIM}")
    _finite(bounds)
    points = []
    for k in range(1 << dim):
        coords = tuple(bounds[i][(k >> i) & 1] for i in range(dim))
        prod = 1.0
        for c in coords:
            prod *= c
        points.append(ExtremePoint(coords, prod))
    return points


def _phi_box(bounds: Sequence[Bounds], has_binaries: bool) -> Bounds:
    if not bounds:
        return 0.0, 1.0
    lo, hi = interval_product_bounds(bounds)
    if has_binaries:
        return min(0.0, lo), max(0.0, hi)
    return lo, hi


def _row(model: LinearModel, handle: RelaxationHandle, pairs, sense: Sense, rhs: float, name: str) -> None:
    handle.rows.append(model.add_constraint(LinearExpr.from_pairs(pairs), sense, rhs, name=model.fresh_name(name)))


def _mccormick_rows(model, handle, x1, x2, b1, b2, w, tag):
    (l1, u1), (l2, u2) = b1, b2
    # w >= u2 x1 + u1 x2 - u1 u2 ; w >= l2 x1 + l1 x2 - l1 l2
    _row(model, handle, [(w, 1.0), (x1, -u2), (x2, -u1)], Sense.GE, -u1 * u2, tag)
    _row(model, handle, [(w, 1.0), (x1, -l2), (x2, -l1)], Sense.GE, -l1 * l2, tag)
    # w <= u2 x1 + l1 x2 - l1 u2 ; w <= l2 x1 + u1 x2 - u1 l2
    _row(model, handle, [(w, 1.0), (x1, -u2), (x2, -l1)], Sense.LE, -l1 * u2, tag)
    _row(model, handle, [(w, 1.0), (x1, -l2), (x2, -u1)], Sense.LE, -u1 * l2, tag)


def mccormick_bilinear(model: LinearModel, x1: int, x2: int, bounds1: Bounds, bounds2: Bounds,
                       name: str = "mc") -> RelaxationHandle:
    """Add ``w`` with the McCormick envelope of ``x1 * x2``."""
    _finite([bounds1, bounds2])
    lo, hi = interval_product_bounds([bounds1, bounds2])
    w = model.add_variable(model.fresh_name(name), lo, hi)
    handle = RelaxationHandle(w, Formulation.MC, factors=[x1, x2],
                              factor_bounds=[tuple(bounds1), tuple(bounds2)])
    _mccormick_rows(model, handle, x1, x2, bounds1, bounds2, w, f"{name}_env")
    return handle


def fortet_binary_product(model: LinearModel, binary_ids: Sequence[int], name: str = "zhat") -> RelaxationHandle:
    """Add ``zhat`` equal to ``prod(z)`` on binary points (``|J| + 1`` rows)."""
    if not binary_ids:
        raise RelaxationError("need at least one binary variable")
    for j in binary_ids:
        if model.variables[j].kind is not VarKind.BINARY:
            raise RelaxationError(f"variable {model.variables[j].name!r} is not binary")
    zhat = model.add_variable(model.fresh_name(name), 0.0, 1.0)
    handle = RelaxationHandle(zhat, Formulation.FORTET, z_hat=zhat)
    _fortet_rows(model, handle, zhat, binary_ids, name)
    return handle


def _fortet_rows(model, handle, zhat, binary_ids, name):
    for j in binary_ids:
        _row(model, handle, [(zhat, 1.0), (j, -1.0)], Sense.LE, 0.0, f"{name}_le")
    pairs = [(zhat, 1.0)] + [(j, -1.0) for j in binary_ids]
    _row(model, handle, pairs, Sense.GE, 1.0 - len(binary_ids), f"{name}_ge")


def _zhat_for(model, handle, binary_ids, zhat_cache, name):
    key: FrozenSet[int] = frozenset(binary_ids)
    if zhat_cache is not None and key in zhat_cache:
        return zhat_cache[key]
    zhat = model.add_variable(model.fresh_name(name), 0.0, 1.0)
    _fortet_rows(model, handle, zhat, binary_ids, name)
    if zhat_cache is not None:
        zhat_cache[key] = zhat
    return zhat


def lambda_formulation(model: LinearModel, term: MimfTerm, name: str = "lam") -> RelaxationHandle:
    """Convex-multiplier hull of ``prod(x)`` over the box of ``term``."""
    if term.binary:
        raise RelaxationError("lambda formulation takes a purely continuous term")
    points = enumerate_extreme_points(term.bounds)
    plo, phi_ = _phi_box(term.bounds, False)
    phi = model.add_variable(model.fresh_name("phi"), plo, phi_)
    lams = [model.add_variable(model.fresh_name(name), 0.0, 1.0) for _ in points]
    handle = RelaxationHandle(phi, Formulation.LAMBDA, lambdas=lams, extreme_points=points, term=term)
    _row(model, handle, [(lam, 1.0) for lam in lams], Sense.EQ, 1.0, f"{name}_sum")
    for i, x in enumerate(term.continuous):
        pairs = [(x, 1.0)] + [(lam, -p.coordinates[i]) for lam, p in zip(lams, points)]
        _row(model, handle, pairs, Sense.EQ, 0.0, f"{name}_x")
    pairs = [(phi, 1.0)] + [(lam, -p.product_value) for lam, p in zip(lams, points)]
    _row(model, handle, pairs, Sense.EQ, 0.0, f"{name}_phi")
    return handle


def _binary_only(model: LinearModel, term: MimfTerm, formulation: Formulation, zhat_cache) -> RelaxationHandle:
    handle = RelaxationHandle(-1, formulation, term=term)
    zhat = _zhat_for(model, handle, term.binary, zhat_cache, "zhat")
    handle.phi_hat = handle.z_hat = zhat
    return handle


def build_f_lambda(model: LinearModel, term: MimfTerm, *,
                   zhat_cache: Optional[Dict[FrozenSet[int], int]] = None) -> RelaxationHandle:
    """Disjunctive extreme-point relaxation of a mixed-integer multilinear term.

    Rows added (``K`` = box corners ``xi_k`` with products ``p_k``)::

        zhat <= z_j                          for j in J
        zhat >= sum(z) - |J| + 1
        sum(lambda) = zhat
        phi = sum(lambda_k p_k)
        sum(lambda_k xi_k) + l (1 - zhat) <= x <= sum(lambda_k xi_k) + u (1 - zhat)

    Terms without binaries fall back to :func:`lambda_formulation`; terms
    without continuous variables reduce to the Fortet product with
    ``phi = zhat``. Pass a dict as ``zhat_cache`` to share ``zhat`` between
    terms over the same binary set.
    """
    if not term.binary:
        handle = lambda_formulation(model, term)
        handle.formulation = Formulation.FLAMBDA
        return handle
    if not term.continuous:
        return _binary_only(model, term, Formulation.FLAMBDA, zhat_cache)
    points = enumerate_extreme_points(term.bounds)
    handle = RelaxationHandle(-1, Formulation.FLAMBDA, extreme_points=points, term=term)
    zhat = _zhat_for(model, handle, term.binary, zhat_cache, "zhat")
    plo, phi_ = _phi_box(term.bounds, True)
    phi = model.add_variable(model.fresh_name("phi"), plo, phi_)
    lams = [model.add_variable(model.fresh_name("lam"), 0.0, 1.0) for _ in points]
    handle.phi_hat, handle.z_hat, handle.lambdas = phi, zhat, lams

    _row(model, handle, [(lam, 1.0) for lam in lams] + [(zhat, -1.0)], Sense.EQ, 0.0, "flam_sum")
    pairs = [(phi, 1.0)] + [(lam, -p.product_value) for lam, p in zip(lams, points)]
    _row(model, handle, pairs, Sense.EQ, 0.0, "flam_phi")
    for i, x in enumerate(term.continuous):
        lo, hi = term.bounds[i]
        hull = [(lam, -p.coordinates[i]) for lam, p in zip(lams, points)]
        # x - sum(lam xi) + l zhat >= l
        _row(model, handle, [(x, 1.0)] + hull + [(zhat, lo)], Sense.GE, lo, "flam_xlo")
        # x - sum(lam xi) + u zhat <= u
        _row(model, handle, [(x, 1.0)] + hull + [(zhat, hi)], Sense.LE, hi, "flam_xhi")
    return handle


def recursive_mccormick_chain(model: LinearModel, continuous_ids: Sequence[int],
                              bounds: Sequence[Bounds]) -> Tuple[int, Bounds, List[RelaxationHandle]]:
    """Relax ``x_1 * ... * x_{n-1}`` by left-to-right McCormick blocks.

    Returns the variable standing for the prefix product, its bounds and the
    McCormick handles created (empty when ``n == 2``, in which case the
    prefix is ``x_1`` itself).
    """
    if len(continuous_ids) < 2:
        raise RelaxationError("recursive McCormick chain needs at least two continuous variables")
    _finite(bounds)
    cur, cur_b = continuous_ids[0], tuple(bounds[0])
    blocks = []
    for t in range(1, len(continuous_ids) - 1):
        h = mccormick_bilinear(model, cur, continuous_ids[t], cur_b, bounds[t], name="w")
        blocks.append(h)
        cur = h.phi_hat
        cur_b = interval_product_bounds(list(bounds[: t + 1]))
    return cur, cur_b, blocks


def build_f_rmc(model: LinearModel, term: MimfTerm, *,
                zhat_cache: Optional[Dict[FrozenSet[int], int]] = None) -> RelaxationHandle:
    """Disjunctive relaxation over a recursive McCormick chain.

    The first ``|I| - 1`` factors are chained into one variable ``w``; the
    disjunction is then written for ``w * x_last * prod(z)`` with lifted
    ``xz_t`` standing for ``factor_t * zhat``::

        phi >= u2 xz1 + u1 xz2 - u1 u2 zhat      (and the three other envelope rows)
        l_t zhat <= xz_t <= u_t zhat
        f_t - (1 - zhat) u_t <= xz_t <= f_t - (1 - zhat) l_t

    Degenerate shapes: no binaries gives a plain chain closed by one
    McCormick block; a single continuous factor keeps one ``xz`` with its
    bound and link rows and ``phi = xz``; no continuous factor is the
    Fortet product.
    """
    nI, nJ = term.shape
    _finite(term.bounds)
    if nJ == 0:
        if nI == 1:
            return RelaxationHandle(term.continuous[0], Formulation.FRMC, term=term)
        w, wb, blocks = recursive_mccormick_chain(model, term.continuous, term.bounds)
        h = mccormick_bilinear(model, w, term.continuous[-1], wb, term.bounds[-1], name="phi")
        handle = RelaxationHandle(h.phi_hat, Formulation.FRMC, term=term,
                                  factors=[w, term.continuous[-1]], factor_bounds=[wb, term.bounds[-1]],
                                  chain=[b.phi_hat for b in blocks])
        handle.rows = [r for b in blocks for r in b.rows] + h.rows
        return handle
    if nI == 0:
        return _binary_only(model, term, Formulation.FRMC, zhat_cache)

    handle = RelaxationHandle(-1, Formulation.FRMC, term=term)
    if nI == 1:
        factors = [term.continuous[0]]
        fbounds = [term.bounds[0]]
    else:
        w, wb, blocks = recursive_mccormick_chain(model, term.continuous, term.bounds)
        handle.chain = [b.phi_hat for b in blocks]
        handle.rows.extend(r for b in blocks for r in b.rows)
        factors = [w, term.continuous[-1]]
        fbounds = [wb, term.bounds[-1]]
    zhat = _zhat_for(model, handle, term.binary, zhat_cache, "zhat")
    xz = [model.add_variable(model.fresh_name("xz"), min(0.0, lo), max(0.0, hi)) for lo, hi in fbounds]
    handle.z_hat, handle.xz_lifted = zhat, xz
    handle.factors, handle.factor_bounds = factors, fbounds

    if nI == 1:
        handle.phi_hat = xz[0]
    else:
        plo, phi_ = _phi_box(term.bounds, True)
        phi = model.add_variable(model.fresh_name("phi"), plo, phi_)
        handle.phi_hat = phi
        (l1, u1), (l2, u2) = fbounds
        a, b = xz
        _row(model, handle, [(phi, 1.0), (a, -u2), (b, -u1), (zhat, u1 * u2)], Sense.GE, 0.0, "frmc_env")
        _row(model, handle, [(phi, 1.0), (a, -l2), (b, -l1), (zhat, l1 * l2)], Sense.GE, 0.0, "frmc_env")
        _row(model, handle, [(phi, 1.0), (a, -u2), (b, -l1), (zhat, l1 * u2)], Sense.LE, 0.0, "frmc_env")
        _row(model, handle, [(phi, 1.0), (a, -l2), (b, -u1), (zhat, u1 * l2)], Sense.LE, 0.0, "frmc_env")
    for f, v, (lo, hi) in zip(factors, xz, fbounds):
        _row(model, handle, [(v, 1.0), (zhat, -lo)], Sense.GE, 0.0, "frmc_bnd")
        _row(model, handle, [(v, 1.0), (zhat, -hi)], Sense.LE, 0.0, "frmc_bnd")
        # xz >= f - (1 - zhat) u  <=>  xz - f - u zhat >= -u
        _row(model, handle, [(v, 1.0), (f, -1.0), (zhat, -hi)], Sense.GE, -hi, "frmc_link")
        # xz <= f - (1 - zhat) l  <=>  xz - f - l zhat <= -l
        _row(model, handle, [(v, 1.0), (f, -1.0), (zhat, -lo)], Sense.LE, -lo, "frmc_link")
    return handle


BUILDERS = {
    Formulation.FLAMBDA: build_f_lambda,
    Formulation.FRMC: build_f_rmc,
}


def build(model: LinearModel, term: MimfTerm, formulation: Formulation, **kwargs) -> RelaxationHandle:
    try:
        builder = BUILDERS[Formulation(formulation)]
    except KeyError:
        raise RelaxationError(f"no term builder for {formulation}") from None
    return builder(model, term, **kwargs)


def term_shapes(max_continuous: int, max_binary: int):
    """All ``(|I|, |J|)`` pairs up to the given sizes, excluding ``(0, 0)``."""
    return [s for s in itertools.product(range(max_continuous + 1), range(max_binary + 1)) if s != (0, 0)]
