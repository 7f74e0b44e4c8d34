"""Discretization and spectrum of A = -J0 d/dt - S, plus an independent monodromy oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ._util import J0, fourier_diff_matrix, trig_resample
from .errors import AsymmetryError, MismatchError, RootBracketingError
from .kernels import jacobi_eigh, monodromy_batch
from .operator import OperatorCoefficients

GAP_TOL = 1e-5
FOURIER_DEFECT_TOL = 1e-10
JACOBI_MAX_N = 160
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class DiscreteOperator:
    matrix: np.ndarray
    scheme: str
    N: int
    defect: float
    """Relative asymmetry max|M - M^T| / max|M| before symmetrization."""


@dataclass(frozen=True)
class Cluster:
    mu: float
    multiplicity: int
    members: Tuple[int, ...]


@dataclass(frozen=True)
class Spectrum:
    mus: np.ndarray
    """Retained eigenvalues, ascending."""
    vectors: np.ndarray
    """(K, N, 2) eigenfunctions on the grid, unit discrete L2 norm (mean of |c|^2)."""
    clusters: List[Cluster]
    gap: float
    scheme: str
    N: int
    window: float
    method: str = ""

    @property
    def eigenpairs(self):
        return list(zip(self.mus, self.vectors))

    def multiplicities(self):
        return [c.multiplicity for c in self.clusters]

    def cluster_vectors(self, k: int) -> np.ndarray:
        return self.vectors[list(self.clusters[k].members)]

    def nearest_cluster(self, mu: float) -> int:
        return int(np.argmin([abs(c.mu - mu) for c in self.clusters]))


def _fd2_matrix(n: int) -> np.ndarray:
    d = np.zeros((n, n))
    i = np.arange(n)
    d[i, (i + 1) % n] = 0.5 * n
    d[i, (i - 1) % n] = -0.5 * n
    return d


def _coefficients_on(op: OperatorCoefficients, n: int) -> np.ndarray:
    S = op.S
    m = S.shape[0]
    if n == m:
        return S
    if n > m:
        return trig_resample(S, n)
    if m % n:
        raise ValueError(f"cannot restrict {m} samples to {n}")
    return S[:: m // n]


def discretize(op: OperatorCoefficients, scheme: str = "fourier", N: Optional[int] = None,
               nyquist_shift: bool = True) -> DiscreteOperator:
    """Symmetric 2N x 2N matrix of A on the grid t_i = i/N.

    Unknowns are ordered component-major: index a*N + i holds c_a(t_i).
    For ``fourier`` the Nyquist mode, which the differentiation matrix
    annihilates, is pushed to +-pi*N (the edge of the resolved band) so it
    cannot pose as a physical eigenvalue.
    """
    n = op.N if N is None else int(N)
    if n < 16:
        raise ValueError("N must be >= 16")
    if scheme == "fourier":
        if n & (n - 1):
            raise ValueError("fourier scheme needs N a power of two")
        d = fourier_diff_matrix(n)
    elif scheme == "fd2":
        d = _fd2_matrix(n)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    S = _coefficients_on(op, n)
    mat = -np.kron(J0, d)
    idx = np.arange(n)
    for a in range(2):
        for b in range(2):
            mat[a * n + idx, b * n + idx] -= S[:, a, b]
    if scheme == "fourier" and nyquist_shift:
        v = (-1.0) ** idx / math.sqrt(n)
        mat += math.pi * n * np.kron(np.diag([1.0, -1.0]), np.outer(v, v))
    scale = max(np.max(np.abs(mat)), 1e-300)
    defect = float(np.max(np.abs(mat - mat.T)) / scale)
    if scheme == "fourier" and defect > FOURIER_DEFECT_TOL:
        raise AsymmetryError(defect)
    return DiscreteOperator(0.5 * (mat + mat.T), scheme, n, defect)


def cluster_values(mus: Sequence[float], gap_tol: float = GAP_TOL) -> List[Cluster]:
    """Group sorted values whose neighbours differ by at most gap_tol*(1+|mu|)."""
    out: List[Cluster] = []
    group: List[int] = []
    for i, mu in enumerate(mus):
        if group and abs(mu - mus[group[-1]]) > gap_tol * (1.0 + abs(mu)):
            out.append(Cluster(float(np.mean([mus[j] for j in group])), len(group), tuple(group)))
            group = []
        group.append(i)
    if group:
        out.append(Cluster(float(np.mean([mus[j] for j in group])), len(group), tuple(group)))
    return out


def spectral_gap(clusters: Sequence[Cluster]) -> float:
    if len(clusters) < 2:
        return math.inf
    return float(min(b.mu - a.mu for a, b in zip(clusters[:-1], clusters[1:])))


def eigensolve(matrix, window: float, method: str = "auto", gap_tol: float = GAP_TOL,
               jacobi_tol: float = 1e-12) -> Spectrum:
    """Full symmetric eigendecomposition; keep |mu| <= window and cluster.

    ``method``: ``jacobi`` (cyclic Jacobi kernel), ``lapack`` (numpy eigh) or
    ``auto`` (Jacobi up to dimension JACOBI_MAX_N, LAPACK above).
    """
    if isinstance(matrix, DiscreteOperator):
        mat, scheme, n = matrix.matrix, matrix.scheme, matrix.N
    else:
        mat = np.asarray(matrix, dtype=float)
        scheme, n = "matrix", mat.shape[0] // 2
    dim = mat.shape[0]
    if method == "auto":
        method = "jacobi" if dim <= JACOBI_MAX_N else "lapack"
    if method == "jacobi":
        w, v, _ = jacobi_eigh(mat, jacobi_tol)
    elif method == "lapack":
        w, v = np.linalg.eigh(mat)
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(w, kind="stable")
    w, v = w[order], v[:, order]
    keep = np.abs(w) <= window
    w, v = w[keep], v[:, keep]
    if dim % 2 == 0:
        vec = np.transpose(v.reshape(2, dim // 2, -1), (2, 1, 0)) * math.sqrt(dim // 2)
    else:
        vec = v.T[:, :, None]
    clusters = cluster_values(list(w), gap_tol)
    return Spectrum(w, vec, clusters, spectral_gap(clusters), scheme, n, float(window), method)


def spectrum_residuals(disc: DiscreteOperator, spec: Spectrum) -> dict:
    """Eigen-residuals and orthonormality defect in the discrete L2 norm."""
    n = spec.N
    flat = np.transpose(spec.vectors, (0, 2, 1)).reshape(len(spec.mus), -1).T / math.sqrt(n)
    res = disc.matrix @ flat - flat * spec.mus
    rel = np.linalg.norm(res, axis=0) / (1.0 + np.abs(spec.mus))
    gram = flat.T @ flat
    return {
        "max_residual": float(np.max(rel)) if rel.size else 0.0,
        "orthonormality": float(np.max(np.abs(gram - np.eye(gram.shape[0])))) if rel.size else 0.0,
    }


# --- monodromy oracle -----------------------------------------------------

class _Monodromy:
    def __init__(self, S: np.ndarray, mu_max: float, target: float = 0.02):
        n = S.shape[0]
        bound = mu_max + float(np.max(np.linalg.norm(S, 2, axis=(-2, -1))))
        steps = max(n // 2, math.ceil(bound / target))
        ratio = max(1, math.ceil(2 * steps / n))
        self.fine = np.ascontiguousarray(trig_resample(S, n * ratio))
        if self.fine.shape[0] % 2:
            self.fine = np.ascontiguousarray(trig_resample(S, 2 * n * ratio))

    def psi(self, mus) -> np.ndarray:
        return monodromy_batch(self.fine, np.ascontiguousarray(np.atleast_1d(mus), dtype=float))

    def f(self, mus) -> np.ndarray:
        p = self.psi(mus)
        return (p[:, 0, 0] - 1.0) * (p[:, 1, 1] - 1.0) - p[:, 0, 1] * p[:, 1, 0]


def _bisect(mono: _Monodromy, lo, hi, flo, iters=60):
    lo, hi, flo = np.array(lo, float), np.array(hi, float), np.array(flo, float)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = mono.f(mid)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
        if np.all(hi - lo < 1e-13 * (1 + np.abs(lo))):
            break
    return 0.5 * (lo + hi)


def _golden(mono: _Monodromy, a, b, sign, iters=80):
    """Minimize sign*f on each bracket [a, b] simultaneously."""
    a, b, sign = np.array(a, float), np.array(b, float), np.array(sign, float)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = sign * mono.f(c), sign * mono.f(d)
    for _ in range(iters):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new = np.where(left, b - GOLDEN * (b - a), a + GOLDEN * (b - a))
        fn = sign * mono.f(new)
        d, fd, c, fc = (np.where(left, c, new), np.where(left, fc, fn),
                        np.where(left, new, d), np.where(left, fn, fd))
        if np.all(b - a < 1e-12 * (1 + np.abs(a))):
            break
    x = 0.5 * (a + b)
    return x, sign * mono.f(x)


def _refine_double(mono: _Monodromy, x: float, steps: int = 3, h: float = 1e-5) -> float:
    """Gauss-Newton on Psi(mu) - Id, which vanishes linearly at a double root."""
    for _ in range(steps):
        p = mono.psi([x - h, x, x + h])
        r = (p[1] - np.eye(2)).ravel()
        dp = ((p[2] - p[0]) / (2 * h)).ravel()
        x = x - float(r @ dp) / float(dp @ dp)
    return x


def monodromy_oracle(op: OperatorCoefficients, mu_window: float, tol: float = 1e-10,
                     scan_step: float = 0.05, sv_tol: float = 1e-5,
                     near_zero: float = 1e-6, step_target: float = 0.02) -> List[Tuple[float, int]]:
    """Eigenvalues of the periodic problem -J0 c' - S c = mu c via the period map.

    mu is an eigenvalue iff det(Psi_mu(1) - Id) vanishes (evaluated directly
    rather than as 2 - tr Psi, which RK4's slight loss of det Psi = 1 would bias).
    Sign changes on a scan grid are refined by bisection; local minima of
    |det| without a sign change are refined by golden-section search and
    either split into two roots (if the extremum changes sign), accepted as a
    double root (|det| <= tol; then Psi = Id there and the location is
    polished by Gauss-Newton on Psi - Id) or reported via RootBracketingError when the
    minimum is small (<= near_zero) but not conclusive.

    RK4 uses about (mu_max + |S|) / step_target steps; its phase error grows
    like mu^5 h^4, so tighten ``step_target`` for sub-1e-8 accuracy at large |mu|.
    """
    W = float(mu_window)
    mono = _Monodromy(op.S, W + 1.0, step_target)
    grid = np.arange(-W - 0.5, W + 0.5 + scan_step, scan_step)
    fv = mono.f(grid)
    roots: List[float] = []
    exact = np.nonzero(fv == 0.0)[0]
    roots.extend(grid[exact].tolist())
    sc = np.nonzero(np.sign(fv[:-1]) * np.sign(fv[1:]) < 0)[0]
    if sc.size:
        roots.extend(_bisect(mono, grid[sc], grid[sc + 1], fv[sc]).tolist())
    af = np.abs(fv)
    mins = [i for i in range(1, len(grid) - 1)
            if af[i] <= af[i - 1] and af[i] <= af[i + 1] and fv[i] != 0.0
            and np.sign(fv[i - 1]) == np.sign(fv[i]) == np.sign(fv[i + 1])]
    if mins:
        mins = np.array(mins)
        sgn = np.sign(fv[mins])
        x, ext = _golden(mono, grid[mins - 1], grid[mins + 1], sgn)
        for i, xm, e, s in zip(mins, x, ext, sgn):
            if e < 0:
                a = _bisect(mono, [grid[i - 1]], [xm], [fv[i - 1]])[0]
                b = _bisect(mono, [xm], [grid[i + 1]], [s * e])[0]
                roots.extend([a, b])
            elif e <= tol:
                roots.append(_refine_double(mono, float(xm)))
            elif e <= near_zero:
                raise RootBracketingError(float(xm), float(s * e))
    roots = sorted(r for r in roots if abs(r) <= W)
    out = []
    for r in roots:
        if out and abs(r - out[-1][0]) < 1e-9:
            continue
        p = mono.psi([r])[0]
        sv = np.linalg.svd(p - np.eye(2), compute_uv=False)
        mult = int(np.sum(sv <= sv_tol * max(1.0, np.linalg.norm(p, 2))))
        out.append((float(r), max(mult, 1)))
    return out


@dataclass
class SpectrumComparison:
    pairs: List[Tuple[float, float, int, int]] = field(default_factory=list)
    max_delta: float = 0.0
    multiplicities_agree: bool = True
    unmatched: List[float] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.multiplicities_agree and not self.unmatched

    def as_dict(self) -> dict:
        return {"max_delta": self.max_delta, "multiplicities_agree": self.multiplicities_agree,
                "unmatched": list(self.unmatched), "n_pairs": len(self.pairs)}


def compare_spectra(spec: Spectrum, oracle: Sequence[Tuple[float, int]],
                    match_tol: float = 1e-3, strict: bool = False) -> SpectrumComparison:
    """Pair oracle roots with discrete clusters by proximity.

    Roots within ``match_tol`` of the window edge may legitimately lack a
    partner on the other side and are skipped.
    """
    rep = SpectrumComparison()
    used = set()
    edge = spec.window - match_tol
    for mu, mult in oracle:
        if not spec.clusters:
            if abs(mu) < edge:
                rep.unmatched.append(mu)
            continue
        k = spec.nearest_cluster(mu)
        c = spec.clusters[k]
        if abs(c.mu - mu) > match_tol:
            if abs(mu) < edge:
                rep.unmatched.append(mu)
                rep.multiplicities_agree = False
            continue
        used.add(k)
        rep.pairs.append((mu, c.mu, mult, c.multiplicity))
        rep.max_delta = max(rep.max_delta, abs(c.mu - mu))
        if mult != c.multiplicity:
            rep.multiplicities_agree = False
    for k, c in enumerate(spec.clusters):
        if k not in used and abs(c.mu) < edge:
            rep.unmatched.append(c.mu)
            rep.multiplicities_agree = False
    if strict and not rep.ok:
        raise MismatchError(f"spectra disagree: {rep.as_dict()}")
    return rep
