"""Pure-numpy dual simplex pivot loop.

Mirror of ``_kernel.pyx``; the driver in :mod:`mimfrelax.solver.simplex`
falls back to this module when the compiled extension is unavailable.

The working problem is ``[A, -I] [x_s; x_l] = 0`` with every structural and
logical variable carrying finite working bounds. The basis inverse is the LU
factorization ``lu`` of the basis at the last refactorization followed by a
product-form eta file: eta ``t`` stores pivot row ``eta_row[t]``, pivot
element ``eta_piv[t]`` and the off-pivot entries of the entering column in
``eta_idx/eta_val[eta_start[t]:eta_start[t+1]]``. ``eta_count`` is
``[number_of_etas, entries_used]``.

The factorization is passed as an :class:`LUFactor`. This module solves
with the SuperLU object; the compiled kernel runs its own triangular solves
on the extracted factors.
"""
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

BASIC = 0
AT_LOWER = 1
AT_UPPER = 2

OPTIMAL = 0
INFEASIBLE = 1
PIVOT_LIMIT = 2
NUMERIC = 3

BLAND_AFTER = 1000
DEGEN_EPS = 1e-12
DROP = 1e-14


class LUFactor(NamedTuple):
    """``Pr B Pc = L U`` with unit-diagonal ``L``; factors stored without their diagonals."""
    lu: object
    Lp: np.ndarray
    Li: np.ndarray
    Lx: np.ndarray
    Up: np.ndarray
    Ui: np.ndarray
    Ux: np.ndarray
    Ud: np.ndarray
    perm_r: np.ndarray
    perm_c: np.ndarray


def _strip_diagonal(M):
    """Off-diagonal CSC arrays of a square sparse matrix plus its diagonal."""
    M = M.tocsc()
    M.sort_indices()
    n = M.shape[0]
    cols = np.repeat(np.arange(n), np.diff(M.indptr))
    on = M.indices == cols
    diag = np.zeros(n)
    diag[cols[on]] = M.data[on]
    keep = ~on
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(cols[keep], minlength=n), out=indptr[1:])
    return indptr, M.indices[keep].astype(np.int64), M.data[keep].astype(float), diag


def lu_factor(lu) -> LUFactor:
    Lp, Li, Lx, _ = _strip_diagonal(lu.L)
    Up, Ui, Ux, Ud = _strip_diagonal(lu.U)
    return LUFactor(lu, Lp, Li, Lx, Up, Ui, Ux, Ud,
                    lu.perm_r.astype(np.int64), lu.perm_c.astype(np.int64))


def ftran(factor, eta_start, eta_row, eta_piv, eta_idx, eta_val, ne, rhs):
    y = factor.lu.solve(rhs)
    for t in range(ne):
        r = eta_row[t]
        tt = y[r] / eta_piv[t]
        if tt != 0.0:
            s, e = eta_start[t], eta_start[t + 1]
            y[eta_idx[s:e]] -= eta_val[s:e] * tt
        y[r] = tt
    return y


def btran(factor, eta_start, eta_row, eta_piv, eta_idx, eta_val, ne, rhs):
    v = np.array(rhs, dtype=float)
    for t in range(ne - 1, -1, -1):
        r = eta_row[t]
        s, e = eta_start[t], eta_start[t + 1]
        v[r] = (v[r] - eta_val[s:e] @ v[eta_idx[s:e]]) / eta_piv[t]
    return factor.lu.solve(v, "T")


def run_dual(Ap, Ai, Ax, Rp, Rj, Rx, lb, ub, x, d, head, status, factor,
             eta_start, eta_row, eta_piv, eta_idx, eta_val, eta_count, state,
             max_pivots, tol_p, tol_d, tol_piv):
    """Run at most ``max_pivots`` bounded dual simplex pivots.

    ``state`` is ``[degenerate_run, bland_mode]`` and is updated in place.
    Returns ``(code, pivots)``.
    """
    m = head.shape[0]
    n = Ap.shape[0] - 1
    AT = sp.csr_matrix((Ax, Ai, Ap), shape=(n, m))
    eta_cap = eta_row.shape[0]
    nnz_cap = eta_idx.shape[0]
    alpha = np.empty(n + m)
    unit = np.zeros(m)
    movable = lb != ub
    pivots = 0
    while pivots < max_pivots:
        ne, used = int(eta_count[0]), int(eta_count[1])
        if ne >= eta_cap or used + m > nnz_cap:
            return PIVOT_LIMIT, pivots
        xb = x[head]
        below = lb[head] - xb
        above = xb - ub[head]
        infeas = np.maximum(below, above)
        viol = np.flatnonzero(infeas > tol_p)
        if viol.size == 0:
            return OPTIMAL, pivots
        if state[1]:
            r = int(viol[np.argmin(head[viol])])
        else:
            r = int(viol[np.argmax(infeas[viol])])
        p = int(head[r])
        to_lower = below[r] > 0.0
        delta = xb[r] - (lb[p] if to_lower else ub[p])

        unit[r] = 1.0
        rho = btran(factor, eta_start, eta_row, eta_piv, eta_idx, eta_val, ne, unit)
        unit[r] = 0.0
        alpha[:n] = AT @ rho
        alpha[n:] = -rho
        at = -alpha if to_lower else alpha
        cand = np.flatnonzero(
            movable
            & (((status == AT_LOWER) & (at > tol_piv)) | ((status == AT_UPPER) & (at < -tol_piv)))
        )
        if cand.size == 0:
            return INFEASIBLE, pivots
        slack = np.maximum(np.where(status[cand] == AT_LOWER, d[cand], -d[cand]), 0.0)
        mag = np.abs(at[cand])
        if state[1]:
            q = int(cand[np.argmin(slack / mag)])
        else:
            bound = np.min((slack + tol_d) / mag)
            ok = slack / mag <= bound
            q = int(cand[ok][np.argmax(mag[ok])])
        a_rq = alpha[q]
        dq = d[q]
        if (status[q] == AT_LOWER and dq < 0.0) or (status[q] == AT_UPPER and dq > 0.0):
            dq = 0.0
        theta_d = dq / a_rq

        a = np.zeros(m)
        if q < n:
            a[Ai[Ap[q]:Ap[q + 1]]] = Ax[Ap[q]:Ap[q + 1]]
        else:
            a[q - n] = -1.0
        col = ftran(factor, eta_start, eta_row, eta_piv, eta_idx, eta_val, ne, a)
        piv = col[r]
        if abs(piv) < tol_piv or abs(piv - a_rq) > 1e-7 * max(1.0, abs(piv)):
            return NUMERIC, pivots

        theta_p = delta / piv
        x[head] -= theta_p * col
        x[q] += theta_p

        nb = status != BASIC
        d[nb] -= theta_d * alpha[nb]
        d[q] = 0.0
        d[p] = -theta_d
        status[p] = AT_LOWER if to_lower else AT_UPPER
        x[p] = lb[p] if to_lower else ub[p]
        status[q] = BASIC
        head[r] = q

        keep = np.flatnonzero(np.abs(col) > DROP)
        keep = keep[keep != r]
        k = keep.size
        eta_idx[used:used + k] = keep
        eta_val[used:used + k] = col[keep]
        eta_row[ne] = r
        eta_piv[ne] = piv
        eta_start[ne + 1] = used + k
        eta_count[0] = ne + 1
        eta_count[1] = used + k

        if abs(theta_d) < DEGEN_EPS:
            state[0] += 1
            if state[0] >= BLAND_AFTER:
                state[1] = 1
        else:
            state[0] = 0
        pivots += 1
    return PIVOT_LIMIT, pivots
