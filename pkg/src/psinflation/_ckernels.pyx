# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled integer kernels for orbit canonicalization and outcome counting."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def canonicalize_tables(const unsigned char[:, :] tables, const Py_ssize_t[:, :] maps):
    """Lexicographic minimum of ``tables[v, maps[g]]`` over all ``g``."""
    cdef Py_ssize_t V = tables.shape[0], T = tables.shape[1], G = maps.shape[0]
    out_arr = np.empty((V, T), dtype=np.uint8)
    cdef unsigned char[:, :] out = out_arr
    cdef Py_ssize_t v, g, t
    cdef unsigned char a, b
    cdef int state
    for v in range(V):
        for t in range(T):
            out[v, t] = tables[v, maps[0, t]]
        for g in range(1, G):
            # compare candidate against the running best, bail at first difference
            state = 0
            for t in range(T):
                a = tables[v, maps[g, t]]
                b = out[v, t]
                if a < b:
                    state = -1
                    break
                if a > b:
                    state = 1
                    break
            if state == -1:
                for t in range(T):
                    out[v, t] = tables[v, maps[g, t]]
    return out_arr


def outcome_histogram(const unsigned char[:, :] tables, const Py_ssize_t[:, :] positions,
                      const long long[:] radix, Py_ssize_t nrows):
    """``counts[v, r]`` = number of rows ``k`` with ``sum_a tables[v, positions[k, a]] * radix[a] == r``."""
    cdef Py_ssize_t V = tables.shape[0], K = positions.shape[0], A = positions.shape[1]
    counts_arr = np.zeros((V, nrows), dtype=np.int64)
    cdef long long[:, :] counts = counts_arr
    cdef Py_ssize_t v, k, a
    cdef long long idx
    for v in range(V):
        for k in range(K):
            idx = 0
            for a in range(A):
                idx += tables[v, positions[k, a]] * radix[a]
            counts[v, idx] += 1
    return counts_arr
