"""Perturbations of J along an orbit: tangent vectors, retraction, variation of A.

Everything is expressed in the fixed unitary frame of the unperturbed triad.
A tangent vector B at J0 is a symmetric 2x2 field anti-commuting with J0.
The retraction J_s = e^X J0 e^-X with X = s J0 B / 2 stays compatible and
its frame metric is e^-2X; e^X is therefore a unitary frame change for J_s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from ._util import J0, I2, anticommuting_part, nonperiodic_derivative, spectral_derivative, \
    sym, trig_resample
from .errors import CompatibilityLostError, ContinuationAmbiguityError
from .operator import OperatorCoefficients, connection_free_S
from .orbits import IsospeedReebOrbit
from .spectral import Spectrum, discretize, eigensolve

MAX_CONDITION = 1e8


def project_tangent(B: np.ndarray) -> np.ndarray:
    """Project onto symmetric matrices anti-commuting with J0."""
    return sym(anticommuting_part(np.asarray(B, dtype=float)))


@dataclass(frozen=True)
class TangentPerturbation:
    B: np.ndarray
    """(N, 2, 2) frame samples."""
    seed: Optional[int] = None
    modes: int = 0

    @property
    def N(self) -> int:
        return self.B.shape[0]

    def residuals(self) -> dict:
        b = self.B
        return {"anti_linear": float(np.max(np.abs(b @ J0 + J0 @ b))),
                "symmetric": float(np.max(np.abs(b - np.swapaxes(b, -1, -2))))}

    def scaled(self, factor: float) -> "TangentPerturbation":
        return TangentPerturbation(self.B * factor, self.seed, self.modes)


def random_tangent(orbit_or_n: Union[IsospeedReebOrbit, int], seed: int,
                   modes: int = 3) -> TangentPerturbation:
    """Smooth random tangent field: Fourier modes 0..modes with U(-1, 1) coefficients."""
    n = orbit_or_n if isinstance(orbit_or_n, (int, np.integer)) else orbit_or_n.N
    rng = np.random.default_rng(seed)
    t = np.arange(n) / n
    coef = rng.uniform(-1.0, 1.0, size=(2 * modes + 1, 2, 2))
    B = np.broadcast_to(coef[0], (n, 2, 2)).copy()
    for k in range(1, modes + 1):
        B += np.cos(2 * np.pi * k * t)[:, None, None] * coef[2 * k - 1]
        B += np.sin(2 * np.pi * k * t)[:, None, None] * coef[2 * k]
    return TangentPerturbation(project_tangent(B), seed, modes)


def _expm_sym_traceless(X: np.ndarray) -> np.ndarray:
    """exp of symmetric traceless 2x2 matrices (X^2 = r^2 Id)."""
    r = np.sqrt(np.maximum(X[..., 0, 0] ** 2 + X[..., 0, 1] ** 2, 0.0))
    c = np.cosh(r)
    sh = np.where(r > 1e-8, np.sinh(r) / np.where(r > 0, r, 1.0), 1.0 + r * r / 6.0)
    return c[..., None, None] * I2 + sh[..., None, None] * X


def retraction_frame(B: np.ndarray, s: float) -> np.ndarray:
    """e^X with X = s J0 B / 2 (symmetric, anti-commuting with J0)."""
    X = 0.5 * s * (J0 @ np.asarray(B, dtype=float))
    P = _expm_sym_traceless(X)
    cond = np.max(np.linalg.cond(P)) ** 2
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise CompatibilityLostError(f"s={s}: metric condition {cond:.3e} exceeds {MAX_CONDITION:.0e}")
    return P


def retract_J(orbit_or_B, B=None, s: float = 0.0) -> np.ndarray:
    """Per-sample frame matrices of J_s = e^X J0 e^-X.

    Accepts ``retract_J(B, s=...)`` or ``retract_J(orbit, B, s)``.
    """
    if B is None:
        B = orbit_or_B
    B = B.B if isinstance(B, TangentPerturbation) else np.asarray(B, dtype=float)
    P = retraction_frame(B, s)
    Pinv = retraction_frame(B, -s)
    Js = P @ J0 @ Pinv
    # compatibility: frame metric Omega Js = e^-2X must stay positive definite
    G = -J0 @ Js
    if np.min(np.linalg.eigvalsh(sym(G))) <= 0:
        raise CompatibilityLostError(f"s={s}: metric lost positivity")
    return Js


def raw_perturbed_S(op: OperatorCoefficients, Js: np.ndarray) -> np.ndarray:
    """S_J with A(J_s) c = -Js c' - S_J c in the fixed reference frame."""
    return connection_free_S(op.gamma_phi, Js)


def apply_raw(op: OperatorCoefficients, Js: np.ndarray, c: np.ndarray) -> np.ndarray:
    """A(J_s) c in the fixed reference frame (not self-adjoint in the reference metric)."""
    return -np.einsum("nij,nj->ni", Js, spectral_derivative(c)) \
        - np.einsum("nij,nj->ni", raw_perturbed_S(op, Js), c)


def perturbed_operator(op: OperatorCoefficients, B, s: float) -> OperatorCoefficients:
    """A(J_s) written in the J_s-unitary frame e^X, i.e. -J0 d/dt - S_hat.

    S_hat = e^-X (Js (e^X)' + S_J e^X); it is symmetric up to discretization
    error, which is kept (not symmetrized) so callers can monitor it.
    """
    B = B.B if isinstance(B, TangentPerturbation) else np.asarray(B, dtype=float)
    if s == 0.0:
        return OperatorCoefficients(op.orbit, op.triv, op.S.copy(), "F3_perturbed", op.gamma_phi)
    P = retraction_frame(B, s)
    Pinv = retraction_frame(B, -s)
    Js = P @ J0 @ Pinv
    S_hat = Pinv @ (Js @ spectral_derivative(P) + raw_perturbed_S(op, Js) @ P)
    return OperatorCoefficients(op.orbit, op.triv, S_hat, "F3_perturbed", op.gamma_phi)


@dataclass(frozen=True)
class VariationOperator:
    """V = d/ds A(J_s) at s = 0 in frame form.

    V c = -1/2 (Id + J0) NB c - B (c' + Gamma^phi c) - 1/2 B M0 c with
    NB = B' + [Gamma^phi, B] (= T L_R B) and M0 = [Gamma^phi, J0] (= T L_R J).
    """
    B: np.ndarray
    gamma_phi: np.ndarray
    zeroth: np.ndarray = field(repr=False)

    def apply(self, c: np.ndarray) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        return -np.einsum("nij,nj...->ni...", self.B, spectral_derivative(c)) \
            + np.einsum("nij,nj...->ni...", self.zeroth, c)


def variation_operator(op: OperatorCoefficients, B) -> VariationOperator:
    B = B.B if isinstance(B, TangentPerturbation) else np.asarray(B, dtype=float)
    g = op.gamma_phi
    nb = spectral_derivative(B) + g @ B - B @ g
    m0 = g @ J0 - J0 @ g
    zeroth = -0.5 * (I2 + J0) @ nb - B @ g - 0.5 * B @ m0
    return VariationOperator(B, g, zeroth)


def variation_closed_form_constant(B: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Zeroth-order part of dS/ds for constant B on an L_R J = 0 background.

    Differentiates S_J = J Gamma + M/2 + J M/2, M = [Gamma, J], at J = J0 in
    direction B (B' = 0): dS = B Gamma + [Gamma, B]/2 + B M0/2 + J0 [Gamma, B]/2,
    so V c = -B c' - dS c.
    """
    m0 = gamma @ J0 - J0 @ gamma
    cb = gamma @ B - B @ gamma
    return -(B @ gamma + 0.5 * cb + 0.5 * B @ m0 + 0.5 * J0 @ cb)


@dataclass(frozen=True)
class RestrictedMatrix:
    cluster_mu: float
    entries: np.ndarray
    eigenvalues: np.ndarray
    discriminant: float
    raw_asymmetry: float

    def distinct(self, tol: float = 1e-8) -> bool:
        """Eigenvalues separated by more than tol*(1 + max|nu|), i.e. above roundoff."""
        nu = np.sort(self.eigenvalues)
        if nu.size < 2:
            return True
        return bool(np.min(np.diff(nu)) > tol * (1.0 + np.max(np.abs(nu))))


def discriminant(eigs: Sequence[float]) -> float:
    eigs = list(eigs)
    out = 1.0
    for i in range(len(eigs)):
        for j in range(i + 1, len(eigs)):
            out *= (eigs[i] - eigs[j]) ** 2
    return float(out)


def restricted_matrix(op: OperatorCoefficients, spectrum: Spectrum, cluster: int,
                      B) -> RestrictedMatrix:
    """Symmetrized <e_i, V e_j> (discrete L2, reference metric) on a cluster."""
    V = variation_operator(op, B)
    vecs = spectrum.cluster_vectors(cluster)
    Ve = np.stack([V.apply(e) for e in vecs])
    raw = np.einsum("ind,jnd->ij", vecs, Ve) / vecs.shape[1]
    ent = sym(raw)
    nu = np.linalg.eigvalsh(ent)
    return RestrictedMatrix(spectrum.clusters[cluster].mu, ent, nu, discriminant(nu),
                            float(np.max(np.abs(raw - raw.T))))


@dataclass
class SplittingReport:
    cluster_mu: float
    restricted: RestrictedMatrix
    rows: List[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"cluster_mu": self.cluster_mu,
                "restricted_eigenvalues": self.restricted.eigenvalues.tolist(),
                "discriminant": self.restricted.discriminant, "rows": self.rows}


def splitting_experiment(op: OperatorCoefficients, spectrum: Spectrum, cluster: int, B,
                         s_list: Sequence[float], window: Optional[float] = None) -> SplittingReport:
    """Recompute the spectrum of A(J_s) and compare cluster splitting to first order."""
    c = spectrum.clusters[cluster]
    m = c.multiplicity
    if m < 2:
        raise ValueError("splitting needs a cluster of multiplicity >= 2")
    rm = restricted_matrix(op, spectrum, cluster, B)
    nu = np.sort(rm.eigenvalues)
    win = window if window is not None else abs(c.mu) + 10.0
    others = [k.mu for k in spectrum.clusters if k is not c]
    neighbour = min((abs(x - c.mu) for x in others), default=math.inf)
    rep = SplittingReport(c.mu, rm)
    for s in s_list:
        if s == 0.0:
            rep.rows.append({"s": 0.0, "eigenvalues": [c.mu] * m, "split": 0.0, "predicted": 0.0,
                             "deviation": 0.0, "simple": False})
            continue
        ps = eigensolve(discretize(perturbed_operator(op, B, s), N=spectrum.N), win)
        idx = np.argsort(np.abs(ps.mus - c.mu))[:m]
        mus = np.sort(ps.mus[idx])
        if np.max(np.abs(mus - c.mu)) > 0.5 * neighbour:
            raise ContinuationAmbiguityError(f"s={s}: cluster at {c.mu:.6f} collides with neighbours")
        split = mus[-1] - mus[0]
        pred = abs(s) * (nu[-1] - nu[0])
        dev = abs(split - pred) / pred if pred > 0 else math.inf
        simple = all(k.multiplicity == 1 for k in ps.clusters
                     if abs(k.mu - c.mu) <= 0.5 * neighbour)
        rep.rows.append({"s": float(s), "eigenvalues": mus.tolist(), "split": float(split),
                         "predicted": float(pred), "deviation": float(dev), "simple": bool(simple)})
    return rep


# --- the B-equation -------------------------------------------------------

def M_matrix(T: float) -> np.ndarray:
    return -0.5 * T * (I2 + J0)


def M_inverse(T: float) -> np.ndarray:
    if T == 0:
        raise ValueError("T must be nonzero")
    return -(1.0 / T) * (I2 - J0)


def N_field(op: OperatorCoefficients, mu: float, lie_J: Optional[np.ndarray] = None) -> np.ndarray:
    """N = -T((mu/T) Id + 1/2 J0 (L_R J)_frame)."""
    T = op.T
    L = op.triv.lie_J if lie_J is None else lie_J
    return -T * ((mu / T) * I2 + 0.5 * J0 @ L)


@dataclass(frozen=True)
class BSolution:
    t: np.ndarray
    B: np.ndarray
    """(K+1, 2, 2) solution at t_k = k/K, endpoint included."""
    residual: float
    """Sup-norm plug-back residual of the original equation."""
    steps: int

    @property
    def relative_residual(self) -> float:
        """Residual over max(1, sup|B|); B grows like exp(-mu t) for mu < 0."""
        return self.residual / max(1.0, float(np.max(np.abs(self.B))))


def solve_B_ode(op: OperatorCoefficients, L_field: np.ndarray, B0: np.ndarray, mu: float,
                substeps: int = 8) -> BSolution:
    """Solve M L_R B + B N = L along the orbit as an initial value problem.

    In frame coordinates L_R B = (B' + [Gamma^phi, B]) / T, so
    B' = T M^-1 (L - B N) - [Gamma^phi, B] = -(Id - J0)(L - B N) - [Gamma^phi, B].
    Coefficients are trigonometrically interpolated to the RK4 stage points;
    the plug-back residual of the original equation uses a 7-point
    finite-difference derivative of the computed path.
    """
    T = op.T
    n = op.N
    K = n * substeps
    fine = 2 * K
    g = trig_resample(op.gamma_phi, fine)
    L = trig_resample(np.asarray(L_field, dtype=float), fine)
    Nf = trig_resample(N_field(op, mu), fine)
    g = np.concatenate([g, g[:1]])
    L = np.concatenate([L, L[:1]])
    Nf = np.concatenate([Nf, Nf[:1]])
    Minv = M_inverse(T)

    def rhs(i, b):
        return T * Minv @ (L[i] - b @ Nf[i]) - (g[i] @ b - b @ g[i])

    h = 1.0 / K
    out = np.empty((K + 1, 2, 2))
    b = np.array(B0, dtype=float)
    out[0] = b
    for j in range(K):
        k1 = rhs(2 * j, b)
        k2 = rhs(2 * j + 1, b + 0.5 * h * k1)
        k3 = rhs(2 * j + 1, b + 0.5 * h * k2)
        k4 = rhs(2 * j + 2, b + h * k3)
        b = b + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[j + 1] = b
    db = nonperiodic_derivative(out, h)
    gk, Lk, Nk = g[::2], L[::2], Nf[::2]
    lie_b = (db + gk @ out - out @ gk) / T
    res = M_matrix(T) @ lie_b + out @ Nk - Lk
    return BSolution(np.arange(K + 1) / K, out, float(np.max(np.abs(res))), K)


def c_phi(op: OperatorCoefficients) -> np.ndarray:
    """C_phi = Gamma^phi - Gamma_triad in the trivialization's frame."""
    return op.gamma_phi - op.triv.closure_generator
