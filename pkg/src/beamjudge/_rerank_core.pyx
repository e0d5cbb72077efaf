# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled re-ranking kernels.

Same semantics as beamjudge._rerank_py, with the inner promotion pass
running over C arrays. The grid kernel exists because threshold tuning
replays the pass for every (threshold, entry) pair, which dominates
runtime on realistic beam sets.
"""

from libc.stdlib cimport free, malloc

BACKEND = "compiled"


def rerank_pass(scores, double threshold):
    """One backward promotion pass; returns candidate indices in new order."""
    cdef Py_ssize_t n = len(scores)
    cdef double *s = <double *> malloc(n * sizeof(double))
    cdef Py_ssize_t *perm = <Py_ssize_t *> malloc(n * sizeof(Py_ssize_t))
    if s == NULL or perm == NULL:
        free(s)
        free(perm)
        raise MemoryError()
    cdef Py_ssize_t i
    cdef double tmp_s
    cdef Py_ssize_t tmp_p
    try:
        for i in range(n):
            s[i] = scores[i]
            perm[i] = i
        for i in range(n - 1, 0, -1):
            if s[i] >= s[i - 1] + threshold:
                tmp_s = s[i]; s[i] = s[i - 1]; s[i - 1] = tmp_s
                tmp_p = perm[i]; perm[i] = perm[i - 1]; perm[i - 1] = tmp_p
        return [perm[i] for i in range(n)]
    finally:
        free(s)
        free(perm)


def grid_top_indices(score_lists, thresholds):
    """Post-rerank top candidate index per (threshold, entry).

    Flattens all beams into one C buffer once, then replays the backward
    pass in a scratch buffer for every grid point.
    """
    cdef Py_ssize_t n_entries = len(score_lists)
    cdef Py_ssize_t n_thresholds = len(thresholds)
    cdef Py_ssize_t total = 0
    cdef Py_ssize_t max_len = 0
    cdef Py_ssize_t i, j, k, n, off

    lengths_py = [len(s) for s in score_lists]
    for n in lengths_py:
        total += n
        if n > max_len:
            max_len = n
    if total == 0:
        total = 1
    if max_len == 0:
        max_len = 1
    if n_thresholds == 0:
        return []

    cdef double *flat = <double *> malloc(total * sizeof(double))
    cdef Py_ssize_t *offsets = <Py_ssize_t *> malloc((n_entries + 1) * sizeof(Py_ssize_t))
    cdef double *scratch = <double *> malloc(max_len * sizeof(double))
    cdef Py_ssize_t *perm = <Py_ssize_t *> malloc(max_len * sizeof(Py_ssize_t))
    cdef double *ts = <double *> malloc(n_thresholds * sizeof(double))
    if flat == NULL or offsets == NULL or scratch == NULL or perm == NULL or ts == NULL:
        free(flat); free(offsets); free(scratch); free(perm); free(ts)
        raise MemoryError()

    cdef double t, tmp_s
    cdef Py_ssize_t tmp_p
    try:
        off = 0
        offsets[0] = 0
        for i in range(n_entries):
            entry = score_lists[i]
            for j in range(lengths_py[i]):
                flat[off] = entry[j]
                off += 1
            offsets[i + 1] = off
        for k in range(n_thresholds):
            ts[k] = thresholds[k]

        out = []
        for k in range(n_thresholds):
            t = ts[k]
            row = [0] * n_entries
            for i in range(n_entries):
                n = offsets[i + 1] - offsets[i]
                off = offsets[i]
                for j in range(n):
                    scratch[j] = flat[off + j]
                    perm[j] = j
                for j in range(n - 1, 0, -1):
                    if scratch[j] >= scratch[j - 1] + t:
                        tmp_s = scratch[j]; scratch[j] = scratch[j - 1]; scratch[j - 1] = tmp_s
                        tmp_p = perm[j]; perm[j] = perm[j - 1]; perm[j - 1] = tmp_p
                row[i] = perm[0]
            out.append(row)
        return out
    finally:
        free(flat); free(offsets); free(scratch); free(perm); free(ts)
