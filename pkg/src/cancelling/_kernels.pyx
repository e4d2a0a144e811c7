# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled one-sided Jacobi SVD for batches of small dense matrices.

Same rotation order, stopping rule and output layout as the numpy
fallback in ``_kernels_py``; results agree to rounding.
"""
import numpy as np
from libc.math cimport sqrt, fabs


cdef void _svd_one(double[:, ::1] u, double[:, ::1] v, double[::1] s,
                   int m, int n, int max_sweeps, double eps,
                   int* converged) noexcept nogil:
    cdef int sweep, p, q, i, rotated
    cdef double alpha, beta, gamma, zeta, t, c, sn, up, uq, vp, vq
    cdef double tiny = 0.0

    for i in range(m):
        for p in range(n):
            tiny = tiny + u[i, p] * u[i, p]
    # columns this small count as zero; wide matrices need it to terminate
    tiny = tiny * eps * eps

    for i in range(n):
        for p in range(n):
            v[i, p] = 1.0 if i == p else 0.0

    converged[0] = 0
    for sweep in range(max_sweeps):
        rotated = 0
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for i in range(m):
                    alpha = alpha + u[i, p] * u[i, p]
                    beta = beta + u[i, q] * u[i, q]
                    gamma = gamma + u[i, p] * u[i, q]
                if alpha <= tiny or beta <= tiny:
                    continue
                if gamma == 0.0 or fabs(gamma) <= eps * sqrt(alpha * beta):
                    continue
                rotated = 1
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                c = 1.0 / sqrt(1.0 + t * t)
                sn = c * t
                for i in range(m):
                    up = u[i, p]
                    uq = u[i, q]
                    u[i, p] = c * up - sn * uq
                    u[i, q] = sn * up + c * uq
                for i in range(n):
                    vp = v[i, p]
                    vq = v[i, q]
                    v[i, p] = c * vp - sn * vq
                    v[i, q] = sn * vp + c * vq
        if not rotated:
            converged[0] = 1
            break

    for p in range(n):
        alpha = 0.0
        for i in range(m):
            alpha = alpha + u[i, p] * u[i, p]
        s[p] = sqrt(alpha)
        if s[p] > 0.0:
            for i in range(m):
                u[i, p] = u[i, p] / s[p]


def jacobi_svd_batch(a, int max_sweeps=60, double eps=1e-15):
    """Batched SVD ``a[b] = u[b] @ diag(s[b]) @ v[b].T``.

    ``a`` has shape (B, m, n). Returns ``(u, s, v, converged)`` with u of
    shape (B, m, n), s of shape (B, n) sorted descending, v of shape
    (B, n, n) and a boolean convergence flag per matrix. Columns of u
    belonging to zero singular values are zero.
    """
    cdef double[:, :, ::1] work = np.array(a, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t nb = work.shape[0]
    cdef int m = <int>work.shape[1]
    cdef int n = <int>work.shape[2]
    v_arr = np.empty((nb, n, n), dtype=np.float64)
    s_arr = np.empty((nb, n), dtype=np.float64)
    conv_arr = np.empty(nb, dtype=np.int32)
    cdef double[:, :, ::1] v = v_arr
    cdef double[:, ::1] s = s_arr
    cdef int[::1] conv = conv_arr
    cdef Py_ssize_t b
    cdef int flag
    with nogil:
        for b in range(nb):
            _svd_one(work[b], v[b], s[b], m, n, max_sweeps, eps, &flag)
            conv[b] = flag

    u_arr = np.asarray(work)
    order = np.argsort(-s_arr, axis=1, kind="stable")
    s_arr = np.take_along_axis(s_arr, order, axis=1)
    u_arr = np.take_along_axis(u_arr, order[:, None, :], axis=2)
    v_arr = np.take_along_axis(v_arr, order[:, None, :], axis=2)
    return u_arr, s_arr, v_arr, conv_arr.astype(bool)
