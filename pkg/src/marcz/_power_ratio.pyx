# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled coordinate-search kernel for ratios of weighted |.|^p power sums.

The objective on a coefficient vector c is

    r(c) = sum_i w_num[i] * |(A c)_i|^p  /  sum_i w_den[i] * |(A c)_i|^p

with w_num allowed to be signed and w_den nonnegative.  r is scale invariant,
so the search lives on the unit sphere of c.  The numpy fallback in
_power_ratio_np.py mirrors these semantics step for step; keep them in sync.
"""

from libc.math cimport fabs, pow, sqrt

import numpy as np


cdef inline double _pw(double v, double p, int pcase) noexcept nogil:
    # |v|^p with fast paths for the exponents the pipelines actually use
    if pcase == 1:
        return v
    if pcase == 2:
        return v * v
    if pcase == 3:
        return v * sqrt(v)
    return pow(v, p)


cdef inline int _classify(double p) noexcept nogil:
    if p == 1.0:
        return 1
    if p == 2.0:
        return 2
    if p == 1.5:
        return 3
    return 0


cdef void _matvec(double[:, ::1] A, double[::1] c, double[::1] y) noexcept nogil:
    cdef Py_ssize_t m = A.shape[0], n = A.shape[1], i, k
    cdef double acc
    for i in range(m):
        acc = 0.0
        for k in range(n):
            acc += A[i, k] * c[k]
        y[i] = acc


cdef double _ratio(double[::1] y, double[::1] wn, double[::1] wd,
                   double p, int pcase, double* den_out) noexcept nogil:
    cdef Py_ssize_t m = y.shape[0], i
    cdef double num = 0.0, den = 0.0, v
    for i in range(m):
        v = _pw(fabs(y[i]), p, pcase)
        num += wn[i] * v
        den += wd[i] * v
    den_out[0] = den
    if den <= 0.0:
        return 0.0
    return num / den


cdef double _cand_ratio(double[::1] y, double[:, ::1] A, Py_ssize_t k, double t,
                        double[::1] wn, double[::1] wd,
                        double p, int pcase, double* den_out) noexcept nogil:
    # ratio at the unnormalized candidate c + t*e_k, using the cached y = A c
    cdef Py_ssize_t m = y.shape[0], i
    cdef double num = 0.0, den = 0.0, v
    for i in range(m):
        v = _pw(fabs(y[i] + t * A[i, k]), p, pcase)
        num += wn[i] * v
        den += wd[i] * v
    den_out[0] = den
    if den <= 0.0:
        return 0.0
    return num / den


def refine_ratio(double[:, ::1] A, double[::1] w_num, double[::1] w_den,
                 double p, double[::1] c0, bint maximize,
                 int max_iter, double rel_tol, double[::1] step_mags):
    """Greedy coordinate line search on the unit coefficient sphere.

    Candidate order per coordinate is +mag, -mag for each magnitude in
    step_mags order; the first strict improvement among ties wins.  Returns
    (value, c) with c the refined unit coefficient vector.
    """
    cdef Py_ssize_t m = A.shape[0], n = A.shape[1], k, j2, it, nmag = step_mags.shape[0]
    cdef int pcase = _classify(p)
    cdef double[::1] c = np.array(c0, dtype=np.float64, copy=True)
    cdef double[::1] y = np.empty(m, dtype=np.float64)
    cdef double num, den, r, r_prev, rc, best_r, best_t, t, nv, ref
    cdef bint better

    if c.shape[0] != n or w_num.shape[0] != m or w_den.shape[0] != m:
        raise ValueError("kernel input shapes disagree")

    nv = 0.0
    for k in range(n):
        nv += c[k] * c[k]
    if nv == 0.0:
        raise ValueError("zero start vector")

    with nogil:
        nv = sqrt(nv)
        for k in range(n):
            c[k] /= nv
        _matvec(A, c, y)
        r = _ratio(y, w_num, w_den, p, pcase, &den)

    if den <= 0.0:
        raise ValueError("denominator vanishes at the start vector")

    with nogil:
        for it in range(max_iter):
            r_prev = r
            for k in range(n):
                best_t = 0.0
                best_r = r
                for j2 in range(2 * nmag):
                    t = step_mags[j2 >> 1]
                    if j2 & 1:
                        t = -t
                    rc = _cand_ratio(y, A, k, t, w_num, w_den, p, pcase, &den)
                    if den > 0.0:
                        if maximize:
                            better = rc > best_r
                        else:
                            better = rc < best_r
                        if better:
                            best_r = rc
                            best_t = t
                if best_t != 0.0:
                    c[k] += best_t
                    nv = 0.0
                    for j2 in range(n):
                        nv += c[j2] * c[j2]
                    nv = sqrt(nv)
                    for j2 in range(n):
                        c[j2] /= nv
                    _matvec(A, c, y)
                    r = _ratio(y, w_num, w_den, p, pcase, &den)
            ref = fabs(r_prev)
            if ref < 1e-300:
                ref = 1e-300
            if fabs(r - r_prev) <= rel_tol * ref:
                break

    return float(r), np.asarray(c)
