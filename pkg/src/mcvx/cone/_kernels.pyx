# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled solver kernels: cone projection and the dense splitting loop.

The dense loop runs without the GIL, so restarts in threads overlap.
"""

import numpy as np
from libc.math cimport sqrt, fabs, isfinite

DEF OPTIMAL = 0
DEF MAX_ITERS = 1
DEF NUMERICAL_FAILURE = 2


cdef void _project(const double[::1] v, double[::1] out, Py_ssize_t nzero, Py_ssize_t nnonneg,
                   const long[::1] socd) noexcept nogil:
    cdef Py_ssize_t i, k, d, pos
    cdef double t, nx, a, scale
    for i in range(nzero):
        out[i] = 0.0
    for i in range(nzero, nzero + nnonneg):
        out[i] = v[i] if v[i] > 0.0 else 0.0
    pos = nzero + nnonneg
    for k in range(socd.shape[0]):
        d = socd[k]
        t = v[pos]
        nx = 0.0
        for i in range(pos + 1, pos + d):
            nx += v[i] * v[i]
        nx = sqrt(nx)
        if nx <= t:
            for i in range(pos, pos + d):
                out[i] = v[i]
        elif nx <= -t:
            for i in range(pos, pos + d):
                out[i] = 0.0
        else:
            a = 0.5 * (nx + t)
            scale = a / nx
            out[pos] = a
            for i in range(pos + 1, pos + d):
                out[i] = scale * v[i]
        pos += d


def _dims(soc_dims):
    return np.ascontiguousarray(soc_dims, dtype=np.int_)


def project_product(v, long nzero, long nnonneg, soc_dims, out=None, groups=None):
    """Euclidean projection onto {0}^nzero x R_+^nnonneg x SOC(d1) x ..."""
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=float)
    if out is None:
        out = np.empty(vv.shape[0])
    cdef double[::1] oo = out
    cdef long[::1] sd = _dims(soc_dims)
    with nogil:
        _project(vv, oo, nzero, nnonneg, sd)
    return out


cdef void _matvec(const double[:, ::1] A, const double[::1] x, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(A.shape[0]):
        acc = 0.0
        for j in range(A.shape[1]):
            acc += A[i, j] * x[j]
        out[i] = acc


cdef void _rmatvec(const double[:, ::1] A, const double[::1] t, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double ti
    for j in range(A.shape[1]):
        out[j] = 0.0
    for i in range(A.shape[0]):
        ti = t[i]
        if ti != 0.0:
            for j in range(A.shape[1]):
                out[j] += A[i, j] * ti


cdef void _cho_solve(const double[:, ::1] L, const double[:, ::1] LT, double[::1] r) noexcept nogil:
    # In place: r <- (L L')^{-1} r
    cdef Py_ssize_t i, j, n = L.shape[0]
    cdef double acc
    for i in range(n):
        acc = r[i]
        for j in range(i):
            acc -= L[i, j] * r[j]
        r[i] = acc / L[i, i]
    for i in range(n - 1, -1, -1):
        acc = r[i]
        for j in range(i + 1, n):
            acc -= LT[i, j] * r[j]
        r[i] = acc / LT[i, i]


cdef double _norm(const double[::1] v) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(v.shape[0]):
        acc += v[i] * v[i]
    return sqrt(acc)


def admm_dense(A, L, c, b, rho, double sigma, double alpha, x, w, y, long nzero, long nnonneg,
               soc_dims, dinv, einv, double cscale, double bnorm, double cnorm, double tol,
               long max_iter, long check_every):
    """Dense splitting loop in scaled space; updates x, w, y in place.

    ``L`` is the lower Cholesky factor of sigma*I + A' diag(rho) A.
    Returns (status, iterations, primal_res, dual_res, gap, objective).
    """
    cdef double[:, ::1] Av = np.ascontiguousarray(A, dtype=float)
    cdef double[:, ::1] Lv = np.ascontiguousarray(L, dtype=float)
    cdef double[:, ::1] LTv = np.ascontiguousarray(np.asarray(L).T, dtype=float)
    cdef const double[::1] cv = np.ascontiguousarray(c, dtype=float)
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=float)
    cdef const double[::1] rv = np.ascontiguousarray(rho, dtype=float)
    cdef const double[::1] dv = np.ascontiguousarray(dinv, dtype=float)
    cdef const double[::1] ev = np.ascontiguousarray(einv, dtype=float)
    cdef double[::1] xv = x
    cdef double[::1] wv = w
    cdef double[::1] yv = y
    cdef long[::1] sd = _dims(soc_dims)
    cdef Py_ssize_t m = Av.shape[0], n = Av.shape[1]
    cdef double[::1] tm = np.empty(m)
    cdef double[::1] vm = np.empty(m)
    cdef double[::1] pm = np.empty(m)
    cdef double[::1] wt = np.empty(m)
    cdef double[::1] rhs = np.empty(n)
    cdef Py_ssize_t i, j
    cdef long k = 0
    cdef int status = MAX_ITERS
    cdef double pres = np.inf, dres = np.inf, gap = np.inf, pobj = np.inf
    cdef double wh, wn, acc, bty
    cdef bint finite
    with nogil:
        k = 0
        while k < max_iter:
            k += 1
            for i in range(m):
                tm[i] = rv[i] * wv[i] - yv[i]
            _rmatvec(Av, tm, rhs)
            for j in range(n):
                rhs[j] = sigma * xv[j] - cv[j] + rhs[j]
            _cho_solve(Lv, LTv, rhs)
            _matvec(Av, rhs, wt)
            for j in range(n):
                xv[j] = (1.0 - alpha) * xv[j] + alpha * rhs[j]
            for i in range(m):
                wh = alpha * wt[i] + (1.0 - alpha) * wv[i]
                wt[i] = wh
                vm[i] = bv[i] - (wh + yv[i] / rv[i])
            _project(vm, pm, nzero, nnonneg, sd)
            for i in range(m):
                wn = bv[i] - pm[i]
                yv[i] += rv[i] * (wt[i] - wn)
                wv[i] = wn
            if k % check_every == 0 or k == max_iter:
                finite = True
                for j in range(n):
                    if not isfinite(xv[j]):
                        finite = False
                for i in range(m):
                    if not isfinite(yv[i]):
                        finite = False
                if not finite:
                    status = NUMERICAL_FAILURE
                    break
                _matvec(Av, xv, tm)
                acc = 0.0
                for i in range(m):
                    acc += (ev[i] * (tm[i] - wv[i])) ** 2
                pres = sqrt(acc) / (1.0 + bnorm)
                _rmatvec(Av, yv, rhs)
                acc = 0.0
                for j in range(n):
                    acc += (dv[j] * (rhs[j] + cv[j])) ** 2
                dres = sqrt(acc) / cscale / (1.0 + cnorm)
                pobj = 0.0
                for j in range(n):
                    pobj += cv[j] * xv[j]
                pobj /= cscale
                bty = 0.0
                for i in range(m):
                    bty += bv[i] * yv[i]
                gap = fabs(pobj + bty / cscale) / (1.0 + fabs(pobj))
                if pres <= tol and dres <= tol and gap <= tol:
                    status = OPTIMAL
                    break
    return status, k, pres, dres, gap, pobj
