"""Small numerical helpers shared across modules (periodic grids, frames)."""

from __future__ import annotations

import numpy as np

J0 = np.array([[0.0, -1.0], [1.0, 0.0]])
I2 = np.eye(2)


def rot(theta):
    """2x2 rotation matrix (or stack of them for array input)."""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty(theta.shape + (2, 2))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def wavenumbers(n: int) -> np.ndarray:
    """Angular wavenumbers 2*pi*k on [0, 1) with the Nyquist mode zeroed."""
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    return 2.0 * np.pi * k


def spectral_derivative(samples: np.ndarray) -> np.ndarray:
    """Differentiate periodic samples on a uniform grid of [0, 1) along axis 0."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    ik = 1j * wavenumbers(n)
    ik = ik.reshape((n,) + (1,) * (samples.ndim - 1))
    return np.fft.ifft(ik * np.fft.fft(samples, axis=0), axis=0).real


def trig_resample(samples: np.ndarray, m: int) -> np.ndarray:
    """Trigonometric interpolation of periodic samples onto m >= n uniform points."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    if m == n:
        return samples.copy()
    if m < n:
        raise ValueError("trig_resample only refines")
    coef = np.fft.fft(samples, axis=0)
    padded = np.zeros((m,) + samples.shape[1:], dtype=complex)
    half = n // 2
    padded[:half] = coef[:half]
    padded[m - half + (0 if n % 2 == 0 else 1):] = coef[half + (0 if n % 2 == 0 else 1):]
    if n % 2 == 0:
        # split the Nyquist coefficient symmetrically
        padded[half] = 0.5 * coef[half]
        padded[m - half] = 0.5 * coef[half]
    return np.fft.ifft(padded, axis=0).real * (m / n)


def fourier_diff_matrix(n: int) -> np.ndarray:
    """Antisymmetric Fourier collocation first-derivative matrix on [0, 1), n even."""
    if n % 2:
        raise ValueError("n must be even")
    h = 2.0 * np.pi / n
    j = np.arange(n)
    diff = j[:, None] - j[None, :]
    with np.errstate(divide="ignore"):
        col = 0.5 * (-1.0) ** diff / np.tan(0.5 * h * diff)
    col[diff == 0] = 0.0
    # d/dt on [0,1) is 2*pi times d/dx on [0, 2*pi)
    return 2.0 * np.pi * col


def anticommuting_part(m: np.ndarray) -> np.ndarray:
    """Part of a 2x2 (stack) anti-commuting with J0: (M + J0 M J0)/2."""
    return 0.5 * (m + J0 @ m @ J0)


def commuting_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m - J0 @ m @ J0)


def sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def sup_norm(a: np.ndarray) -> float:
    """Max over samples of the spectral norm of a stack of small matrices."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 2:
        return float(np.linalg.norm(a, 2))
    return float(np.max(np.linalg.norm(a, ord=2, axis=(-2, -1))))


def fd_weights(offsets, order: int = 1) -> np.ndarray:
    """Finite-difference weights at 0 for the given (integer) stencil offsets."""
    offsets = np.asarray(offsets, dtype=float)
    k = len(offsets)
    vander = np.vander(offsets, k, increasing=True).T
    rhs = np.zeros(k)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(vander, rhs)


def nonperiodic_derivative(samples: np.ndarray, h: float, width: int = 7) -> np.ndarray:
    """High-order one-sided/central FD derivative of samples on [0, 1] (endpoint included)."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    half = width // 2
    out = np.empty_like(samples)
    cache = {}
    for i in range(n):
        start = min(max(i - half, 0), n - width)
        key = i - start
        if key not in cache:
            cache[key] = fd_weights(np.arange(width) - key)
        w = cache[key]
        out[i] = np.tensordot(w, samples[start:start + width], axes=(0, 0)) / h
    return out


def worker_count() -> int:
    """Thread pool size: RSL_THREADS if set (>= 1), else the CPU count."""
    import os

    env = os.environ.get("RSL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1
