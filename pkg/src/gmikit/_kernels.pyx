# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: cyclic Jacobi sweeps and SplitMix64 counter streams.

Both routines mirror ``gmikit._fallback`` step for step; the fallback is the
reference and the two are compared in the test suite.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t _mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def uniform_stream(uint64_t key, uint64_t start, Py_ssize_t count):
    """Uniforms in (0, 1) for counters ``start .. start+count-1`` of ``key``."""
    out = np.empty(count, dtype=np.float64)
    cdef double[::1] view = out
    cdef Py_ssize_t i
    cdef uint64_t z
    with nogil:
        for i in range(count):
            z = _mix64(key + (start + <uint64_t>i + 1) * GOLDEN)
            view[i] = (<double>(z >> 11) + 0.5) * (1.0 / 9007199254740992.0)
    return out


def jacobi_eigen(cnp.ndarray[cnp.float64_t, ndim=2] a_in, int max_sweeps, double tol):
    """Cyclic Jacobi on a symmetric matrix.

    Returns (diagonal, eigenvector matrix, sweeps used). Raises RuntimeError
    when ``max_sweeps`` is exhausted.
    """
    cdef Py_ssize_t n = a_in.shape[0]
    a_np = np.array(a_in, dtype=np.float64, order="C", copy=True)
    v_np = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] a = a_np
    cdef double[:, ::1] v = v_np
    cdef Py_ssize_t p, q, j
    cdef int sweep
    cdef double off, scale, apq, theta, t, c, s, tau, g, h, app, aqq
    scale = 0.0
    for p in range(n):
        for q in range(n):
            scale += a[p, q] * a[p, q]
    scale = sqrt(scale)
    if scale == 0.0:
        return np.zeros(n), v_np, 0
    with nogil:
        for sweep in range(max_sweeps + 1):
            off = 0.0
            for p in range(n):
                for q in range(p + 1, n):
                    off += a[p, q] * a[p, q]
            if sqrt(2.0 * off) <= tol * scale:
                break
            if sweep == max_sweeps:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if fabs(apq) <= 1e-300:
                        continue
                    app = a[p, p]
                    aqq = a[q, q]
                    theta = (aqq - app) / (2.0 * apq)
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    tau = s / (1.0 + c)
                    for j in range(n):
                        g = a[j, p]
                        h = a[j, q]
                        a[j, p] = g - s * (h + g * tau)
                        a[j, q] = h + s * (g - h * tau)
                    for j in range(n):
                        a[p, j] = a[j, p]
                        a[q, j] = a[j, q]
                    a[p, p] = app - t * apq
                    a[q, q] = aqq + t * apq
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    for j in range(n):
                        g = v[j, p]
                        h = v[j, q]
                        v[j, p] = g - s * (h + g * tau)
                        v[j, q] = h + s * (g - h * tau)
    if sqrt(2.0 * off) > tol * scale:
        raise RuntimeError("Jacobi iteration did not converge in %d sweeps" % max_sweeps)
    return np.diagonal(a_np).copy(), v_np, sweep
