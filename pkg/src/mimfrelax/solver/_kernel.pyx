# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dual simplex pivot loop; same contract as ``_kernel_py.run_dual``.

The triangular solves with the LU factors run here as well, on the
off-diagonal CSC arrays carried by ``LUFactor``, so a pivot never calls back
into Python.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

ctypedef cnp.int64_t idx_t

cdef enum:
    BASIC = 0
    AT_LOWER = 1
    AT_UPPER = 2
    OPTIMAL = 0
    INFEASIBLE = 1
    PIVOT_LIMIT = 2
    NUMERIC = 3
    BLAND_AFTER = 1000

cdef double DEGEN_EPS = 1e-12
cdef double DROP = 1e-14


cdef struct Factor:
    Py_ssize_t m
    const idx_t* Lp
    const idx_t* Li
    const double* Lx
    const idx_t* Up
    const idx_t* Ui
    const double* Ux
    const double* Ud
    const idx_t* pr
    const idx_t* pc


cdef class _Hold:
    """Keeps the factor arrays alive while raw pointers to them are in use."""
    cdef const idx_t[::1] Lp, Li, Up, Ui, pr, pc
    cdef const double[::1] Lx, Ux, Ud

    def __init__(self, factor):
        self.Lp = factor.Lp
        self.Li = factor.Li
        self.Lx = factor.Lx
        self.Up = factor.Up
        self.Ui = factor.Ui
        self.Ux = factor.Ux
        self.Ud = factor.Ud
        self.pr = factor.perm_r
        self.pc = factor.perm_c

    cdef Factor view(self):
        cdef Factor f
        f.m = self.Ud.shape[0]
        f.Lp = &self.Lp[0]
        f.Li = &self.Li[0] if self.Li.shape[0] else NULL
        f.Lx = &self.Lx[0] if self.Lx.shape[0] else NULL
        f.Up = &self.Up[0]
        f.Ui = &self.Ui[0] if self.Ui.shape[0] else NULL
        f.Ux = &self.Ux[0] if self.Ux.shape[0] else NULL
        f.Ud = &self.Ud[0]
        f.pr = &self.pr[0]
        f.pc = &self.pc[0]
        return f


cdef void lu_solve(const Factor* f, const double* b, double* w, double* out) noexcept nogil:
    """``out = B^-1 b`` using scratch ``w``."""
    cdef Py_ssize_t m = f.m, j, k
    cdef double wj
    for k in range(m):
        w[f.pr[k]] = b[k]
    for j in range(m):
        wj = w[j]
        if wj != 0.0:
            for k in range(f.Lp[j], f.Lp[j + 1]):
                w[f.Li[k]] -= f.Lx[k] * wj
    for j in range(m - 1, -1, -1):
        wj = w[j]
        if wj != 0.0:
            wj = wj / f.Ud[j]
            w[j] = wj
            for k in range(f.Up[j], f.Up[j + 1]):
                w[f.Ui[k]] -= f.Ux[k] * wj
    for k in range(m):
        out[k] = w[f.pc[k]]


cdef void lu_solve_t(const Factor* f, const double* c, double* v, double* out) noexcept nogil:
    """``out = B^-T c`` using scratch ``v``."""
    cdef Py_ssize_t m = f.m, j, k
    cdef double acc
    for k in range(m):
        v[f.pc[k]] = c[k]
    for j in range(m):
        acc = v[j]
        for k in range(f.Up[j], f.Up[j + 1]):
            acc -= f.Ux[k] * v[f.Ui[k]]
        v[j] = acc / f.Ud[j]
    for j in range(m - 1, -1, -1):
        acc = v[j]
        for k in range(f.Lp[j], f.Lp[j + 1]):
            acc -= f.Lx[k] * v[f.Li[k]]
        v[j] = acc
    for k in range(m):
        out[k] = v[f.pr[k]]


cdef void eta_forward(double* y, const idx_t* eta_start, const idx_t* eta_row, const double* eta_piv,
                      const idx_t* eta_idx, const double* eta_val, Py_ssize_t ne) noexcept nogil:
    cdef Py_ssize_t t, k, rt
    cdef double tt
    for t in range(ne):
        rt = eta_row[t]
        tt = y[rt] / eta_piv[t]
        if tt != 0.0:
            for k in range(eta_start[t], eta_start[t + 1]):
                y[eta_idx[k]] -= eta_val[k] * tt
        y[rt] = tt


cdef void eta_backward(double* v, const idx_t* eta_start, const idx_t* eta_row, const double* eta_piv,
                       const idx_t* eta_idx, const double* eta_val, Py_ssize_t ne) noexcept nogil:
    cdef Py_ssize_t t, k, rt
    cdef double acc
    for t in range(ne - 1, -1, -1):
        rt = eta_row[t]
        acc = v[rt]
        for k in range(eta_start[t], eta_start[t + 1]):
            acc -= eta_val[k] * v[eta_idx[k]]
        v[rt] = acc / eta_piv[t]


def ftran(factor, const idx_t[::1] eta_start, const idx_t[::1] eta_row,
          const double[::1] eta_piv, const idx_t[::1] eta_idx, const double[::1] eta_val,
          Py_ssize_t ne, rhs):
    cdef _Hold hold = _Hold(factor)
    cdef Factor f = hold.view()
    cdef double[::1] b = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef cnp.ndarray y_arr = np.empty(f.m)
    cdef double[::1] y = y_arr
    cdef double[::1] work = np.empty(f.m)
    if f.m == 0:
        return y_arr
    lu_solve(&f, &b[0], &work[0], &y[0])
    if ne:
        eta_forward(&y[0], &eta_start[0], &eta_row[0], &eta_piv[0], &eta_idx[0], &eta_val[0], ne)
    return y_arr


def btran(factor, const idx_t[::1] eta_start, const idx_t[::1] eta_row,
          const double[::1] eta_piv, const idx_t[::1] eta_idx, const double[::1] eta_val,
          Py_ssize_t ne, rhs):
    cdef _Hold hold = _Hold(factor)
    cdef Factor f = hold.view()
    cdef double[::1] v = np.array(rhs, dtype=np.float64)
    cdef cnp.ndarray y_arr = np.empty(f.m)
    cdef double[::1] y = y_arr
    cdef double[::1] work = np.empty(f.m)
    if f.m == 0:
        return y_arr
    if ne:
        eta_backward(&v[0], &eta_start[0], &eta_row[0], &eta_piv[0], &eta_idx[0], &eta_val[0], ne)
    lu_solve_t(&f, &v[0], &work[0], &y[0])
    return y_arr


def run_dual(const idx_t[::1] Ap, const idx_t[::1] Ai, const double[::1] Ax,
             const idx_t[::1] Rp, const idx_t[::1] Rj, const double[::1] Rx,
             const double[::1] lb, const double[::1] ub, double[::1] x, double[::1] d,
             idx_t[::1] head, cnp.int8_t[::1] status, factor,
             idx_t[::1] eta_start, idx_t[::1] eta_row, double[::1] eta_piv,
             idx_t[::1] eta_idx, double[::1] eta_val, idx_t[::1] eta_count,
             idx_t[::1] state, Py_ssize_t max_pivots,
             double tol_p, double tol_d, double tol_piv):
    cdef Py_ssize_t m = head.shape[0]
    cdef Py_ssize_t n = Ap.shape[0] - 1
    cdef Py_ssize_t nt = n + m
    cdef Py_ssize_t eta_cap = eta_row.shape[0]
    cdef Py_ssize_t nnz_cap = eta_idx.shape[0]
    cdef _Hold hold = _Hold(factor)
    cdef Factor f = hold.view()
    cdef double[::1] alpha = np.empty(nt)
    cdef double[::1] vbuf = np.zeros(max(m, 1))
    cdef double[::1] work = np.empty(max(m, 1))
    cdef double[::1] rho = np.empty(max(m, 1))
    cdef double[::1] col = np.empty(max(m, 1))
    cdef Py_ssize_t pivots = 0
    cdef Py_ssize_t i, j, k, r, p, q, ne, used
    cdef double best, inf_i, v, delta, a, mag, slack, bound, ratio, a_rq, dq
    cdef double theta_d, theta_p, piv, best_mag, ri
    cdef bint to_lower, bland
    cdef int code = PIVOT_LIMIT

    if m == 0:
        return OPTIMAL, 0
    with nogil:
        while pivots < max_pivots:
            ne = eta_count[0]
            used = eta_count[1]
            if ne >= eta_cap or used + m > nnz_cap:
                code = PIVOT_LIMIT
                break
            bland = state[1] != 0
            r = -1
            best = tol_p
            for i in range(m):
                p = head[i]
                v = x[p]
                inf_i = lb[p] - v
                if v - ub[p] > inf_i:
                    inf_i = v - ub[p]
                if inf_i > tol_p:
                    if bland:
                        if r < 0 or p < head[r]:
                            r = i
                    elif inf_i > best:
                        best = inf_i
                        r = i
            if r < 0:
                code = OPTIMAL
                break
            p = head[r]
            to_lower = lb[p] - x[p] > 0.0
            if to_lower:
                delta = x[p] - lb[p]
            else:
                delta = x[p] - ub[p]

            # rho = B^-T e_r
            for i in range(m):
                vbuf[i] = 0.0
            vbuf[r] = 1.0
            eta_backward(&vbuf[0], &eta_start[0], &eta_row[0], &eta_piv[0], &eta_idx[0], &eta_val[0], ne)
            lu_solve_t(&f, &vbuf[0], &work[0], &rho[0])

            # alpha row over the nonzeros of rho
            for j in range(n):
                alpha[j] = 0.0
            for i in range(m):
                ri = rho[i]
                alpha[n + i] = -ri
                if ri != 0.0:
                    for k in range(Rp[i], Rp[i + 1]):
                        alpha[Rj[k]] += ri * Rx[k]

            # Harris pass one: relaxed bound on the dual step
            q = -1
            bound = 1e300
            for j in range(nt):
                if status[j] == BASIC or lb[j] == ub[j]:
                    continue
                a = -alpha[j] if to_lower else alpha[j]
                if status[j] == AT_LOWER:
                    if a <= tol_piv:
                        continue
                    slack = d[j]
                else:
                    if a >= -tol_piv:
                        continue
                    slack = -d[j]
                if slack < 0.0:
                    slack = 0.0
                mag = fabs(a)
                if bland:
                    ratio = slack / mag
                else:
                    ratio = (slack + tol_d) / mag
                if ratio < bound:
                    bound = ratio
                    q = j
            if q < 0:
                code = INFEASIBLE
                break
            if not bland:
                # pass two: largest pivot among ratios within the bound
                q = -1
                best_mag = -1.0
                for j in range(nt):
                    if status[j] == BASIC or lb[j] == ub[j]:
                        continue
                    a = -alpha[j] if to_lower else alpha[j]
                    if status[j] == AT_LOWER:
                        if a <= tol_piv:
                            continue
                        slack = d[j]
                    else:
                        if a >= -tol_piv:
                            continue
                        slack = -d[j]
                    if slack < 0.0:
                        slack = 0.0
                    mag = fabs(a)
                    if slack / mag <= bound and mag > best_mag:
                        best_mag = mag
                        q = j

            a_rq = alpha[q]
            dq = d[q]
            if (status[q] == AT_LOWER and dq < 0.0) or (status[q] == AT_UPPER and dq > 0.0):
                dq = 0.0
            theta_d = dq / a_rq

            # col = B^-1 a_q
            for i in range(m):
                vbuf[i] = 0.0
            if q < n:
                for k in range(Ap[q], Ap[q + 1]):
                    vbuf[Ai[k]] = Ax[k]
            else:
                vbuf[q - n] = -1.0
            lu_solve(&f, &vbuf[0], &work[0], &col[0])
            eta_forward(&col[0], &eta_start[0], &eta_row[0], &eta_piv[0], &eta_idx[0], &eta_val[0], ne)
            piv = col[r]
            if fabs(piv) < tol_piv or fabs(piv - a_rq) > 1e-7 * (fabs(piv) if fabs(piv) > 1.0 else 1.0):
                code = NUMERIC
                break

            theta_p = delta / piv
            for i in range(m):
                if col[i] != 0.0:
                    x[head[i]] -= theta_p * col[i]
            x[q] += theta_p

            for j in range(nt):
                if status[j] != BASIC and alpha[j] != 0.0:
                    d[j] -= theta_d * alpha[j]
            d[q] = 0.0
            d[p] = -theta_d
            if to_lower:
                status[p] = AT_LOWER
                x[p] = lb[p]
            else:
                status[p] = AT_UPPER
                x[p] = ub[p]
            status[q] = BASIC
            head[r] = q

            k = used
            for i in range(m):
                if i != r and fabs(col[i]) > DROP:
                    eta_idx[k] = i
                    eta_val[k] = col[i]
                    k += 1
            eta_row[ne] = r
            eta_piv[ne] = piv
            eta_start[ne + 1] = k
            eta_count[0] = ne + 1
            eta_count[1] = k

            if fabs(theta_d) < DEGEN_EPS:
                state[0] += 1
                if state[0] >= BLAND_AFTER:
                    state[1] = 1
            else:
                state[0] = 0
            pivots += 1
    return code, pivots
