# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sparse-gather kernels.

Every routine reads from an already padded 2-D float64 image, so border
handling lives entirely in the caller. Per-pixel accumulation order is
fixed (taps in the order given, directions in the order given) and must
stay in lockstep with ``_pykernels`` so both backends agree bit for bit.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def sparse_conv(const double[:, ::1] padded, int pad,
                const Py_ssize_t[::1] dy, const Py_ssize_t[::1] dx,
                const double[::1] w, double[:, ::1] out):
    """out[y, x] = sum_k w[k] * padded[pad + y + dy[k], pad + x + dx[k]]."""
    cdef Py_ssize_t H = out.shape[0]
    cdef Py_ssize_t W = out.shape[1]
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t y, x, k
    cdef double acc
    with nogil:
        for y in range(H):
            for x in range(W):
                acc = 0.0
                for k in range(n):
                    acc = acc + w[k] * padded[pad + y + dy[k], pad + x + dx[k]]
                out[y, x] = acc


def accumulate_energy(const double[:, ::1] padded, int pad,
                      const Py_ssize_t[:, ::1] dy, const Py_ssize_t[:, ::1] dx,
                      const double[:, ::1] w, double[:, ::1] out):
    """out[y, x] += sum_d (response of direction d)**2, directions in row order.

    ``dy``, ``dx`` and ``w`` are (n_directions, n_taps) tables.
    """
    cdef Py_ssize_t H = out.shape[0]
    cdef Py_ssize_t W = out.shape[1]
    cdef Py_ssize_t nd = w.shape[0]
    cdef Py_ssize_t nt = w.shape[1]
    cdef Py_ssize_t y, x, d, k
    cdef double acc, e
    with nogil:
        for y in range(H):
            for x in range(W):
                e = out[y, x]
                for d in range(nd):
                    acc = 0.0
                    for k in range(nt):
                        acc = acc + w[d, k] * padded[pad + y + dy[d, k], pad + x + dx[d, k]]
                    e = e + acc * acc
                out[y, x] = e
