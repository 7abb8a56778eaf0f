# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled decode kernels: exhaustive ML scans and small LS solves.

Semantics match kernels._numpy entry for entry; ties resolve to the first
minimum in both implementations.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef cnp.complex128_t c128


def ml_argmin(const c128[:, :, ::1] h, const c128[:, ::1] r, const c128[:, ::1] cand):
    """First metric-minimizing candidate index per frame.

    h: (b, rows, l) scaled channels, r: (b, rows), cand: (c, l).
    """
    cdef Py_ssize_t b = h.shape[0]
    cdef Py_ssize_t rows = h.shape[1]
    cdef Py_ssize_t l = h.shape[2]
    cdef Py_ssize_t c = cand.shape[0]
    out_arr = np.empty(b, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t i, j, k, t, arg
    cdef double best, m
    cdef c128 acc
    for i in range(b):
        best = -1.0
        arg = 0
        for j in range(c):
            m = 0.0
            for k in range(rows):
                acc = r[i, k]
                for t in range(l):
                    acc = acc - h[i, k, t] * cand[j, t]
                m += acc.real * acc.real + acc.imag * acc.imag
                if best >= 0.0 and m >= best:
                    # partial sums only grow; this candidate cannot win
                    break
            if best < 0.0 or m < best:
                best = m
                arg = j
        out[i] = arg
    return out_arr


def zf_solve(const c128[:, :, ::1] h, const c128[:, ::1] r):
    """Normal-equation least squares per frame.

    Solves (h' h) z = h' r by Gaussian elimination with partial pivoting.
    Frames whose pivots collapse (rank-deficient channels) get ok = False
    and must be recomputed by the caller with a pseudo-inverse.
    """
    cdef Py_ssize_t b = h.shape[0]
    cdef Py_ssize_t rows = h.shape[1]
    cdef Py_ssize_t l = h.shape[2]
    z_arr = np.zeros((b, l), dtype=np.complex128)
    ok_arr = np.ones(b, dtype=np.uint8)
    cdef c128[:, ::1] z = z_arr
    cdef cnp.uint8_t[::1] ok = ok_arr
    aug_arr = np.empty((l, l + 1), dtype=np.complex128)
    cdef c128[:, ::1] aug = aug_arr
    cdef Py_ssize_t i, j, k, t, piv
    cdef double scale, mag, best
    cdef c128 acc, factor
    for i in range(b):
        # build the augmented system [h'h | h'r]
        scale = 0.0
        for j in range(l):
            for k in range(l):
                acc = 0
                for t in range(rows):
                    acc = acc + h[i, t, j].conjugate() * h[i, t, k]
                aug[j, k] = acc
            acc = 0
            for t in range(rows):
                acc = acc + h[i, t, j].conjugate() * r[i, t]
            aug[j, l] = acc
            mag = aug[j, j].real
            if mag > scale:
                scale = mag
        if scale == 0.0:
            ok[i] = 0
            continue
        for j in range(l):
            piv = j
            best = aug[j, j].real * aug[j, j].real + aug[j, j].imag * aug[j, j].imag
            for k in range(j + 1, l):
                mag = aug[k, j].real * aug[k, j].real + aug[k, j].imag * aug[k, j].imag
                if mag > best:
                    best = mag
                    piv = k
            if best <= 1e-24 * scale * scale:
                ok[i] = 0
                break
            if piv != j:
                for k in range(j, l + 1):
                    acc = aug[j, k]
                    aug[j, k] = aug[piv, k]
                    aug[piv, k] = acc
            for k in range(j + 1, l):
                factor = aug[k, j] / aug[j, j]
                for t in range(j, l + 1):
                    aug[k, t] = aug[k, t] - factor * aug[j, t]
        if ok[i] == 0:
            continue
        for j in range(l - 1, -1, -1):
            acc = aug[j, l]
            for k in range(j + 1, l):
                acc = acc - aug[j, k] * z[i, k]
            z[i, j] = acc / aug[j, j]
    return z_arr, ok_arr.astype(bool)


def slice_nearest(const c128[:, ::1] z, const c128[:, ::1] points):
    """Per-coordinate nearest-point labels, first minimum on ties."""
    cdef Py_ssize_t b = z.shape[0]
    cdef Py_ssize_t l = z.shape[1]
    cdef Py_ssize_t c = points.shape[1]
    out_arr = np.empty((b, l), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, t, j, arg
    cdef double best, m, dr, di
    for i in range(b):
        for t in range(l):
            best = -1.0
            arg = 0
            for j in range(c):
                dr = z[i, t].real - points[t, j].real
                di = z[i, t].imag - points[t, j].imag
                m = dr * dr + di * di
                if best < 0.0 or m < best:
                    best = m
                    arg = j
            out[i, t] = arg
    return out_arr
