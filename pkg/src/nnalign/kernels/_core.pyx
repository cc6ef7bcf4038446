# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled lookup-table kernels (row gather / scatter-add)."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"

ctypedef fused real:
    float
    double


cdef void _gather(real[:, ::1] table, cnp.intp_t[::1] ids, real[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t k, c, n = ids.shape[0], width = table.shape[1]
    for k in range(n):
        for c in range(width):
            out[k, c] = table[ids[k], c]


cdef void _scatter_add(real[:, ::1] out, cnp.intp_t[::1] ids, real[:, ::1] rows) noexcept nogil:
    cdef Py_ssize_t k, c, n = ids.shape[0], width = out.shape[1]
    for k in range(n):
        for c in range(width):
            out[ids[k], c] += rows[k, c]


def gather_rows(table, ids):
    """Return ``table[ids]`` as a new (len(ids), width) array."""
    table = np.ascontiguousarray(table)
    ids = np.ascontiguousarray(ids, dtype=np.intp)
    out = np.empty((ids.shape[0], table.shape[1]), dtype=table.dtype)
    if table.dtype == np.float64:
        _gather[double](table, ids, out)
    elif table.dtype == np.float32:
        _gather[float](table, ids, out)
    else:
        return table[ids]
    return out


def scatter_add_rows(out, ids, rows):
    """Accumulate ``rows[k]`` into ``out[ids[k]]``; duplicates add up."""
    ids = np.ascontiguousarray(ids, dtype=np.intp)
    rows = np.ascontiguousarray(rows, dtype=out.dtype)
    if out.dtype == np.float64:
        _scatter_add[double](out, ids, rows)
    elif out.dtype == np.float32:
        _scatter_add[float](out, ids, rows)
    else:
        np.add.at(out, ids, rows)
