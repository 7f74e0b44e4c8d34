"""Pure-Python/numpy implementations of the hot kernels.

Same signatures and semantics as the compiled ``_ckernels`` module; used
when the extension is not built (or when ``RSL_PURE_PYTHON=1``).
"""

from __future__ import annotations

import math

import numpy as np


def _offdiag_norm(a):
    # summing the off-diagonal directly; sum(a^2) - sum(diag^2) cancels badly
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def jacobi_eigh(a, tol=1e-12, max_sweeps=60):
    """Cyclic Jacobi diagonalization of a symmetric matrix.

    Returns ``(w, v, sweeps)`` with unsorted eigenvalues ``w`` and orthonormal
    eigenvector columns ``v``. Iterates until the off-diagonal Frobenius norm
    is at most ``tol`` times the Frobenius norm of the input.
    """
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(np.linalg.norm(a), 1e-300)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        off = _offdiag_norm(a)
        if off <= tol * scale:
            return np.diag(a).copy(), v, sweeps - 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta  # theta^2 would overflow
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    off = _offdiag_norm(a)
    if off > tol * scale:
        raise RuntimeError(f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e})")
    return np.diag(a).copy(), v, max_sweeps


def monodromy_batch(s_fine, mus):
    """Period map of c' = J0 (S(t) + mu) c over [0, 1] for each mu.

    ``s_fine`` holds S on a uniform grid of M points (M even); RK4 steps of
    size 2/M use the even points as step nodes and the odd points as stage
    midpoints. Returns an array (len(mus), 2, 2).
    """
    s_fine = np.asarray(s_fine, dtype=float)
    mus = np.asarray(mus, dtype=float)
    m = s_fine.shape[0]
    h = 2.0 / m
    k = mus.shape[0]
    eye = np.eye(2)
    # generator G(t) = J0 (S + mu): rows of J0 X are (-X[1], X[0])
    def gen(idx):
        sm = s_fine[idx % m][None, :, :] + mus[:, None, None] * eye
        g = np.empty_like(sm)
        g[:, 0, :] = -sm[:, 1, :]
        g[:, 1, :] = sm[:, 0, :]
        return g

    psi = np.broadcast_to(eye, (k, 2, 2)).copy()
    g0 = gen(0)
    for j in range(m // 2):
        g1 = gen(2 * j + 1)
        g2 = gen(2 * j + 2)
        k1 = g0 @ psi
        k2 = g1 @ (psi + 0.5 * h * k1)
        k3 = g1 @ (psi + 0.5 * h * k2)
        k4 = g2 @ (psi + h * k3)
        psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        g0 = g2
    return psi
