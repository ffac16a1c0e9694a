# cython: language_level=3
# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ``_pykernels``.

Same contract, same LAPACK sequence (dgeqp3 -> dormqr -> dtrtrs), with the
design-matrix fill and bookkeeping done in C loops instead of numpy
temporaries.  Kept in lockstep with the pure-Python module: any behavioural
change must land in both.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt
from scipy.linalg.cython_lapack cimport dgeqp3, dormqr, dtrtrs

cnp.import_array()

LINEAR, CUBIC, THIN_PLATE, GAUSSIAN = 0, 1, 2, 3


def build_design(object x, object centres, int kind, double width):
    """Assemble ``[1 | x | phi(||x - centre||)]`` as an (n, 1 + d + k) array."""
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] cv = np.ascontiguousarray(centres, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t d = xv.shape[1]
    cdef Py_ssize_t k = cv.shape[0]
    if k > 0 and cv.shape[1] != d:
        raise ValueError("centres and inputs disagree on dimension")

    out_arr = np.empty((n, 1 + d + k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t t, j, a
    cdef double s, diff, r
    cdef double denom = -2.0 * width * width

    if kind < 0 or kind > 3:
        raise ValueError(f"unknown basis code {kind}")

    for t in range(n):
        out[t, 0] = 1.0
        for a in range(d):
            out[t, 1 + a] = xv[t, a]
        for j in range(k):
            s = 0.0
            for a in range(d):
                diff = xv[t, a] - cv[j, a]
                s += diff * diff
            if kind == 3:
                out[t, 1 + d + j] = exp(s / denom)
            elif kind == 2:
                out[t, 1 + d + j] = 0.5 * s * log(s) if s > 0.0 else 0.0
            elif kind == 1:
                r = sqrt(s)
                out[t, 1 + d + j] = r * r * r
            else:
                out[t, 1 + d + j] = sqrt(s)
    return out_arr


def least_squares(object design, object targets, double rank_tol, bint want_coef):
    """Column-pivoted QR least squares; see ``_pykernels.least_squares``."""
    a_arr = np.array(design, dtype=np.float64, order="F", copy=True)
    y_arr = np.array(targets, dtype=np.float64, order="F", copy=True)
    cdef double[::1, :] a = a_arr
    cdef double[::1, :] y = y_arr
    cdef int n = <int> a.shape[0]
    cdef int m = <int> a.shape[1]
    cdef int nrhs = <int> y.shape[1]
    if y.shape[0] != n:
        raise ValueError("design and targets disagree on row count")

    cdef int info = 0
    cdef int lwork = 3 * (m + 1)
    jpvt_arr = np.zeros(m, dtype=np.int32)
    cdef int[::1] jpvt = jpvt_arr
    cdef int ntau = min(n, m)
    tau_arr = np.empty(ntau, dtype=np.float64)
    cdef double[::1] tau = tau_arr
    work_arr = np.empty(lwork, dtype=np.float64)
    cdef double[::1] work = work_arr

    dgeqp3(&n, &m, &a[0, 0], &n, &jpvt[0], &tau[0], &work[0], &lwork, &info)
    if info != 0:
        raise RuntimeError(f"dgeqp3 failed with info={info}")

    cdef double top = a[0, 0]
    if top < 0.0:
        top = -top
    cdef int rank = 0
    cdef Py_ssize_t j
    cdef double piv
    for j in range(ntau):
        piv = a[j, j]
        if piv < 0.0:
            piv = -piv
        if piv >= rank_tol * top and piv != 0.0:
            rank += 1
        else:
            break

    cdef char side = b"L"
    cdef char trans_t = b"T"
    cdef int lwork2 = nrhs if nrhs > 1 else 1
    work2_arr = np.empty(lwork2, dtype=np.float64)
    cdef double[::1] work2 = work2_arr
    dormqr(&side, &trans_t, &n, &nrhs, &ntau, &a[0, 0], &n, &tau[0],
           &y[0, 0], &n, &work2[0], &lwork2, &info)
    if info != 0:
        raise RuntimeError(f"dormqr failed with info={info}")

    rss_arr = np.zeros(nrhs, dtype=np.float64)
    cdef double[::1] rss = rss_arr
    cdef Py_ssize_t t, i
    cdef double acc
    for i in range(nrhs):
        acc = 0.0
        for t in range(m, n):
            acc += y[t, i] * y[t, i]
        rss[i] = acc

    if not (want_coef and rank == m):
        return rank, rss_arr, None

    cdef char uplo = b"U"
    cdef char trans_n = b"N"
    cdef char diag_n = b"N"
    dtrtrs(&uplo, &trans_n, &diag_n, &m, &nrhs, &a[0, 0], &n,
           &y[0, 0], &n, &info)
    if info != 0:
        raise RuntimeError(f"dtrtrs failed with info={info}")

    coef_arr = np.empty((m, nrhs), dtype=np.float64)
    cdef double[:, ::1] coef = coef_arr
    for j in range(m):
        for i in range(nrhs):
            coef[jpvt[j] - 1, i] = y[j, i]
    return rank, rss_arr, coef_arr
