# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the hot inner loops.

Semantics match conceptrefine._kernels.pyref exactly for the integer
outputs (identical tie-breaking); float outputs may differ from the NumPy
backend in the last bits because the summation order differs.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def topk_supports(scores, Py_ssize_t k):
    """Row-wise top-k selection with smallest-index tie-breaking."""
    cdef double[:, ::1] s = np.ascontiguousarray(scores, dtype=np.float64)
    cdef Py_ssize_t m = s.shape[0]
    cdef Py_ssize_t n = s.shape[1]
    if k > n:
        raise ValueError("k exceeds number of columns")
    out_arr = np.empty((m, k), dtype=np.int64)
    cdef long long[:, ::1] out = out_arr
    taken_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] taken = taken_arr
    cdef Py_ssize_t h, j, i, best, t
    cdef double best_val
    cdef long long tmp
    for h in range(m):
        for i in range(n):
            taken[i] = 0
        for j in range(k):
            best = -1
            best_val = -1.0
            for i in range(n):
                # strict > keeps the first (smallest-index) maximum
                if not taken[i] and s[h, i] > best_val:
                    best_val = s[h, i]
                    best = i
            taken[best] = 1
            out[h, j] = best
        # insertion sort; k is small
        for j in range(1, k):
            tmp = out[h, j]
            t = j
            while t > 0 and out[h, t - 1] > tmp:
                out[h, t] = out[h, t - 1]
                t -= 1
            out[h, t] = tmp
    return out_arr


def column_grads(R, B, supports, X):
    """Per-column gradients averaged over each column's activating samples."""
    cdef double[:, ::1] Rv = np.ascontiguousarray(R, dtype=np.float64)
    cdef double[:, ::1] Bv = np.ascontiguousarray(B, dtype=np.float64)
    cdef long long[:, ::1] sup = np.ascontiguousarray(supports, dtype=np.int64)
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t m = Rv.shape[0]
    cdef Py_ssize_t n = Rv.shape[1]
    cdef Py_ssize_t d = Xv.shape[1]
    cdef Py_ssize_t k = sup.shape[1]
    # accumulate transposed so the inner loop runs over contiguous memory
    gt_arr = np.zeros((n, d), dtype=np.float64)
    cdef double[:, ::1] gt = gt_arr
    counts_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] counts = counts_arr
    cdef Py_ssize_t h, j, t
    cdef long long i
    cdef double c
    for h in range(m):
        for j in range(k):
            i = sup[h, j]
            c = 2.0 * (Rv[h, i] - Bv[h, i])
            counts[i] += 1.0
            for t in range(d):
                gt[i, t] += c * Xv[h, t]
    for i in range(n):
        if counts[i] > 0.0:
            c = 1.0 / counts[i]
            for t in range(d):
                gt[i, t] *= c
    return np.ascontiguousarray(gt_arr.T)
