# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 propagation and Jacobi eigenvalue loops.

Same signatures and results as ``_pykernels``; see that module for the
contracts.
"""

import numpy as np
from libc.math cimport sqrt

BACKEND = "cython"

cdef double _JACOBI_TOL = 1e-13
cdef int _JACOBI_MAX_SWEEPS = 60


cdef inline void _matmul(const double complex[:, ::1] L,
                         const double complex[:, ::1] x,
                         double complex[:, ::1] y) noexcept nogil:
    cdef Py_ssize_t n = L.shape[0]
    cdef Py_ssize_t m = x.shape[1]
    cdef Py_ssize_t i, j, c
    cdef double complex lij
    for i in range(n):
        for c in range(m):
            y[i, c] = 0
        for j in range(n):
            lij = L[i, j]
            if lij.real == 0.0 and lij.imag == 0.0:
                continue
            for c in range(m):
                y[i, c] = y[i, c] + lij * x[j, c]


def rk4_propagate(L, v0, double h, Py_ssize_t n_out, Py_ssize_t substeps,
                  trace_idx, double trace_tol):
    cdef const double complex[:, ::1] Lv = np.ascontiguousarray(L, dtype=np.complex128)
    cdef double complex[:, ::1] v = np.array(v0, dtype=np.complex128, order="C", copy=True)
    cdef const Py_ssize_t[::1] tidx = np.ascontiguousarray(trace_idx, dtype=np.intp)
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t m = v.shape[1]
    cdef Py_ssize_t nt = tidx.shape[0]

    out_arr = np.empty((n_out + 1, n, m), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    cdef double complex[:, ::1] k1 = np.empty((n, m), dtype=np.complex128)
    cdef double complex[:, ::1] k2 = np.empty((n, m), dtype=np.complex128)
    cdef double complex[:, ::1] k3 = np.empty((n, m), dtype=np.complex128)
    cdef double complex[:, ::1] k4 = np.empty((n, m), dtype=np.complex128)
    cdef double complex[:, ::1] tmp = np.empty((n, m), dtype=np.complex128)
    cdef double complex[::1] tr0 = np.empty(m, dtype=np.complex128)

    cdef double half = 0.5 * h
    cdef double sixth = h / 6.0
    cdef Py_ssize_t k, s, i, c, step = 0, fail = -1
    cdef double complex tr
    cdef double dev

    with nogil:
        for i in range(n):
            for c in range(m):
                out[0, i, c] = v[i, c]
        for c in range(m):
            tr0[c] = 0
            for i in range(nt):
                tr0[c] = tr0[c] + v[tidx[i], c]

        for k in range(n_out):
            for s in range(substeps):
                _matmul(Lv, v, k1)
                for i in range(n):
                    for c in range(m):
                        tmp[i, c] = v[i, c] + half * k1[i, c]
                _matmul(Lv, tmp, k2)
                for i in range(n):
                    for c in range(m):
                        tmp[i, c] = v[i, c] + half * k2[i, c]
                _matmul(Lv, tmp, k3)
                for i in range(n):
                    for c in range(m):
                        tmp[i, c] = v[i, c] + h * k3[i, c]
                _matmul(Lv, tmp, k4)
                for i in range(n):
                    for c in range(m):
                        v[i, c] = v[i, c] + sixth * (
                            k1[i, c] + 2.0 * k2[i, c] + 2.0 * k3[i, c] + k4[i, c])
                step += 1
                for c in range(m):
                    tr = 0
                    for i in range(nt):
                        tr = tr + v[tidx[i], c]
                    tr = tr - tr0[c]
                    dev = sqrt(tr.real * tr.real + tr.imag * tr.imag)
                    if dev > trace_tol:
                        fail = step
                if fail >= 0:
                    break
            if fail >= 0:
                break
            for i in range(n):
                for c in range(m):
                    out[k + 1, i, c] = v[i, c]

    if fail >= 0:
        out_arr[k + 1:] = np.nan
    return out_arr, fail


cdef int _jacobi_sym(double[:, ::1] A) noexcept nogil:
    """Diagonalise a real symmetric matrix in place. Returns sweeps used or -1."""
    cdef Py_ssize_t m = A.shape[0]
    cdef Py_ssize_t p, q, r
    cdef int sweep
    cdef double off, fro, scale, apq, tau, t, c, s, x, y

    fro = 0.0
    for p in range(m):
        for q in range(m):
            fro += A[p, q] * A[p, q]
    scale = sqrt(fro)
    if scale < 1.0:
        scale = 1.0

    for sweep in range(_JACOBI_MAX_SWEEPS):
        off = 0.0
        for p in range(m):
            for q in range(m):
                if p != q:
                    off += A[p, q] * A[p, q]
        if sqrt(off) < _JACOBI_TOL * scale:
            return sweep
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for r in range(m):
                    x = A[p, r]
                    y = A[q, r]
                    A[p, r] = c * x - s * y
                    A[q, r] = s * x + c * y
                for r in range(m):
                    x = A[r, p]
                    y = A[r, q]
                    A[r, p] = c * x - s * y
                    A[r, q] = s * x + c * y
    return -1


def jacobi_eigvalsh(mats):
    cdef const double complex[:, :, ::1] M = np.ascontiguousarray(mats, dtype=np.complex128)
    cdef Py_ssize_t batch = M.shape[0]
    cdef Py_ssize_t n = M.shape[1]
    cdef Py_ssize_t m = 2 * n
    cdef Py_ssize_t b, i, j
    cdef double[:, ::1] A = np.empty((m, m))
    w_arr = np.empty((batch, m))
    cdef double[:, ::1] w = w_arr
    cdef int failed = 0

    with nogil:
        for b in range(batch):
            for i in range(n):
                for j in range(n):
                    A[i, j] = 0.5 * (M[b, i, j].real + M[b, j, i].real)
                    A[i + n, j + n] = A[i, j]
                    A[i + n, j] = 0.5 * (M[b, i, j].imag - M[b, j, i].imag)
                    A[i, j + n] = -A[i + n, j]
            if _jacobi_sym(A) < 0:
                failed = 1
                break
            for i in range(m):
                w[b, i] = A[i, i]

    if failed:
        raise RuntimeError("Jacobi iteration did not converge")
    w_arr.sort(axis=1)
    return 0.5 * (w_arr[:, ::2] + w_arr[:, 1::2])
