# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels (see ``_pykernels`` for semantics)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, copysign

cnp.import_array()


def jacobi_eigh(a, double tol=1e-12, int max_sweeps=60):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] A = np.array(a, dtype=np.float64, copy=True, order="C")
    cdef Py_ssize_t n = A.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] V = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] av = A
    cdef double[:, ::1] vv = V
    cdef Py_ssize_t p, q, i
    cdef int sweep
    cdef double apq, theta, t, c, s, x, y, off, total, scale
    total = 0.0
    for p in range(n):
        for q in range(n):
            total += av[p, q] * av[p, q]
    scale = sqrt(total) if total > 0 else 1e-300
    for sweep in range(1, max_sweeps + 1):
        off = 0.0
        for p in range(n):
            for q in range(n):
                if p != q:
                    off += av[p, q] * av[p, q]
        if sqrt(off) <= tol * scale:
            return np.diag(A).copy(), V, sweep - 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = av[p, q]
                if apq == 0.0:
                    continue
                theta = (av[q, q] - av[p, p]) / (2.0 * apq)
                if fabs(theta) > 1e150:
                    t = 0.5 / theta  # theta^2 would overflow
                else:
                    t = copysign(1.0, theta) / (fabs(theta) + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for i in range(n):
                    x = av[i, p]
                    y = av[i, q]
                    av[i, p] = c * x - s * y
                    av[i, q] = s * x + c * y
                for i in range(n):
                    x = av[p, i]
                    y = av[q, i]
                    av[p, i] = c * x - s * y
                    av[q, i] = s * x + c * y
                av[p, q] = 0.0
                av[q, p] = 0.0
                for i in range(n):
                    x = vv[i, p]
                    y = vv[i, q]
                    vv[i, p] = c * x - s * y
                    vv[i, q] = s * x + c * y
    off = 0.0
    for p in range(n):
        for q in range(n):
            if p != q:
                off += av[p, q] * av[p, q]
    if sqrt(off) > tol * scale:
        raise RuntimeError("Jacobi did not converge in %d sweeps (off=%.3e)" % (max_sweeps, sqrt(off)))
    return np.diag(A).copy(), V, max_sweeps


cdef inline void _mul_gen(double s00, double s01, double s10, double s11, double mu,
                          double* x, double* out) nogil:
    # out = J0 (S + mu I) x for a 2x2 x stored row-major
    cdef double a00 = -s10, a01 = -(s11 + mu), a10 = s00 + mu, a11 = s01
    out[0] = a00 * x[0] + a01 * x[2]
    out[1] = a00 * x[1] + a01 * x[3]
    out[2] = a10 * x[0] + a11 * x[2]
    out[3] = a10 * x[1] + a11 * x[3]


def monodromy_batch(s_fine, mus):
    cdef double[:, :, ::1] S = np.ascontiguousarray(s_fine, dtype=np.float64)
    cdef double[::1] M = np.ascontiguousarray(mus, dtype=np.float64)
    cdef Py_ssize_t m = S.shape[0], nk = M.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out = np.empty((nk, 2, 2), dtype=np.float64)
    cdef double[:, :, ::1] ov = out
    cdef double h = 2.0 / m
    cdef double psi[4]
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double tmp[4]
    cdef Py_ssize_t kk, j, r, i0, i1, i2
    cdef double mu
    with nogil:
        for kk in range(nk):
            mu = M[kk]
            psi[0] = 1.0; psi[1] = 0.0; psi[2] = 0.0; psi[3] = 1.0
            for j in range(m // 2):
                i0 = (2 * j) % m
                i1 = (2 * j + 1) % m
                i2 = (2 * j + 2) % m
                _mul_gen(S[i0, 0, 0], S[i0, 0, 1], S[i0, 1, 0], S[i0, 1, 1], mu, psi, k1)
                for r in range(4):
                    tmp[r] = psi[r] + 0.5 * h * k1[r]
                _mul_gen(S[i1, 0, 0], S[i1, 0, 1], S[i1, 1, 0], S[i1, 1, 1], mu, tmp, k2)
                for r in range(4):
                    tmp[r] = psi[r] + 0.5 * h * k2[r]
                _mul_gen(S[i1, 0, 0], S[i1, 0, 1], S[i1, 1, 0], S[i1, 1, 1], mu, tmp, k3)
                for r in range(4):
                    tmp[r] = psi[r] + h * k3[r]
                _mul_gen(S[i2, 0, 0], S[i2, 0, 1], S[i2, 1, 0], S[i2, 1, 1], mu, tmp, k4)
                for r in range(4):
                    psi[r] = psi[r] + (h / 6.0) * (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r])
            ov[kk, 0, 0] = psi[0]
            ov[kk, 0, 1] = psi[1]
            ov[kk, 1, 0] = psi[2]
            ov[kk, 1, 1] = psi[3]
    return out
