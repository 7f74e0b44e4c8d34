"""Asymptotic operator along a closed Reeb orbit in frame form.

In a unitary trivialization the operator reads A c = -J0 c' - S(t) c on
1-periodic R^2-valued functions. ``assemble`` produces S by three routes:

F1_triad            S = J0 Gamma_triad - (T/2) [(L_R J) J]
F2_levi_civita      S = J0 Gamma_LC + (T/2) Id - (T/2) [(L_R J) J]
F3_connection_free  A = T(-1/2 L_R J - J L_R - 1/2 J (L_R J)) with L_R realized
                    through the flow connection of the frame only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._util import J0, I2, commuting_part, spectral_derivative
from .frames import Trivialization, connection_coefficients, flow_connection
from .geometry import lie_derivative_J
from .orbits import IsospeedReebOrbit

FORMULAS = ("F1_triad", "F2_levi_civita", "F3_connection_free")
SYMMETRY_TOL = 1e-8


@dataclass(frozen=True)
class OperatorCoefficients:
    orbit: IsospeedReebOrbit
    triv: Optional[Trivialization]
    S: np.ndarray
    formula_tag: str
    gamma_phi: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return self.S.shape[0]

    @property
    def T(self) -> float:
        return self.orbit.action if self.orbit is not None else 1.0

    @property
    def asymmetry(self) -> float:
        return float(np.max(np.abs(self.S - np.swapaxes(self.S, -1, -2))))

    def apply(self, c: np.ndarray) -> np.ndarray:
        """A c = -J0 c' - S c for samples c of shape (N, 2) (or (N, 2, k))."""
        c = np.asarray(c, dtype=float)
        return -np.einsum("ij,nj...->ni...", J0, spectral_derivative(c)) \
            - np.einsum("nij,nj...->ni...", self.S, c)


def constant_operator(S, N: int = 64, tag: str = "constant") -> OperatorCoefficients:
    """Operator with a prescribed (constant or sampled) coefficient; no orbit attached."""
    S = np.asarray(S, dtype=float)
    if S.ndim == 2:
        S = np.broadcast_to(S, (N, 2, 2)).copy()
    return OperatorCoefficients(None, None, S, tag)


def frame_lie(op_or_gamma, T: float, c: np.ndarray) -> np.ndarray:
    """Frame coordinates of L_R eta for eta = E c: (c' + Gamma^phi c) / T."""
    gp = op_or_gamma.gamma_phi if isinstance(op_or_gamma, OperatorCoefficients) else op_or_gamma
    return (spectral_derivative(c) + np.einsum("nij,nj...->ni...", gp, c)) / T


def connection_free_S(gamma_phi: np.ndarray, Jm: np.ndarray,
                      dJm: Optional[np.ndarray] = None) -> np.ndarray:
    """S with A c = -Jm c' - S c for an arbitrary frame J-field Jm.

    Uses only the flow connection: with Mf = Jm' + [Gamma^phi, Jm] (which is
    T times the frame matrix of L_R J),
    S = Jm Gamma^phi + Mf/2 + Jm Mf/2.
    """
    if dJm is None:
        dJm = spectral_derivative(Jm)
    mf = dJm + gamma_phi @ Jm - Jm @ gamma_phi
    return Jm @ gamma_phi + 0.5 * mf + 0.5 * Jm @ mf


def assemble(orbit: IsospeedReebOrbit, triv: Trivialization,
             formula_tag: str = "F1_triad") -> OperatorCoefficients:
    """Coefficient field S(t) of the asymptotic operator by the requested formula."""
    T = orbit.action
    gphi = flow_connection(orbit, triv)
    if formula_tag == "F1_triad":
        gam = connection_coefficients(orbit, triv, "triad", method="transport").Gamma
        S = J0 @ gam - 0.5 * T * triv.lie_J_J
    elif formula_tag == "F2_levi_civita":
        gam = connection_coefficients(orbit, triv, "levi_civita", method="lie").Gamma
        S = J0 @ gam + 0.5 * T * I2 - 0.5 * T * triv.lie_J_J
    elif formula_tag == "F3_connection_free":
        jm = np.broadcast_to(J0, gphi.shape)
        S = connection_free_S(gphi, jm, np.zeros_like(gphi))
    else:
        raise ValueError(f"unknown formula {formula_tag!r}; expected one of {FORMULAS}")
    return OperatorCoefficients(orbit, triv, S, formula_tag, gphi)


def lie_J_from_frame(op: OperatorCoefficients) -> np.ndarray:
    """Frame matrix of L_R J recovered from the flow connection alone."""
    g = op.gamma_phi
    return (g @ J0 - J0 @ g) / op.T


@dataclass(frozen=True)
class LinearParts:
    """A = A' + A'' with A' = -J0 d/dt - S' (J0-linear), A'' = -S'' (anti-linear)."""
    S_prime: np.ndarray
    S_doubleprime: np.ndarray

    @property
    def A_doubleprime(self) -> np.ndarray:
        return -self.S_doubleprime

    def reassembled(self) -> np.ndarray:
        return self.S_prime + self.S_doubleprime


def split_linear_parts(op: OperatorCoefficients) -> LinearParts:
    """Split S into its J0-commuting and J0-anti-commuting parts."""
    sp = commuting_part(op.S)
    return LinearParts(sp, op.S - sp)


def normal_spectrum(window: float):
    """Eigenvalues 2 pi k of -i d/dt on 1-periodic functions with |2 pi k| <= window."""
    if window <= 0:
        raise ValueError("window must be positive")
    k = int(math.floor(window / (2 * math.pi)))
    return [2 * math.pi * j for j in range(-k, k + 1)]


def trivial_cylinder_blocks(orbit: IsospeedReebOrbit, triv: Optional[Trivialization] = None) -> dict:
    """Block norms of the linearization on the trivial cylinder over ``orbit``.

    u(tau, t) = (gamma(t), T tau): dw(d/dtau) = 0 in Q and dw(d/dt) = T R(gamma),
    while w*lambda = T dt. The (1,2) block is (1/2)(L_R J) J applied to
    d^pi w = dw - (w*lambda) R; the (2,1) block evaluates
    dlambda(Y, dw/dt) dtau - dlambda(Y, dw/dtau) dt on frame sections Y.
    """
    tr = orbit.triad
    pts = orbit.samples
    T = orbit.action
    reeb = tr.reeb_at(pts)
    dw_dt = T * reeb
    dw_dtau = np.zeros_like(dw_dt)
    dpi_t = dw_dt - T * reeb
    dpi_tau = dw_dtau
    if triv is not None:
        frame = triv.frame
    else:
        frame = tr.xi_basis(pts)
    lj = lie_derivative_J(tr, pts)
    jm = tr.J_at(pts)
    blk12 = 0.5 * np.einsum("nij,nj->ni", lj @ jm, dpi_t)
    blk12 = np.concatenate([blk12, 0.5 * np.einsum("nij,nj->ni", lj @ jm, dpi_tau)])
    dl = tr.dlambda_at(pts)
    dtau_coef = np.einsum("nia,nij,nj->na", frame, dl, dw_dt)
    dt_coef = np.einsum("nia,nij,nj->na", frame, dl, dw_dtau)
    numeric = spectral_derivative(pts) - T * reeb
    numeric = numeric - np.einsum("ni,ni->n", tr.lambda_at(pts), numeric)[:, None] * reeb
    return {
        "block_12": float(np.max(np.abs(blk12))),
        "block_21": float(max(np.max(np.abs(dtau_coef)), np.max(np.abs(dt_coef)))),
        "block_22": "dbar",
        "dpi_w_spectral": float(np.max(np.abs(numeric))),
    }


def eigenfunction_identity_residual(op: OperatorCoefficients, mu: float, c: np.ndarray,
                                    literal: bool = False) -> float:
    """Relative L2 residual of the first-order identity satisfied by eigenfunctions.

    Default form:  J L_R eta + 1/2 (L_R J) eta + (mu/T) eta + 1/2 J (L_R J) eta = 0,
    which follows from the connection-free form of A. ``literal=True`` drops
    the leading J (the variant without it does not hold in general).
    """
    T = op.T
    lie = frame_lie(op, T, c)
    L = op.triv.lie_J if op.triv is not None else lie_J_from_frame(op)
    lc = np.einsum("nij,nj->ni", L, c)
    head = lie if literal else np.einsum("ij,nj->ni", J0, lie)
    res = head + 0.5 * lc + (mu / T) * c + 0.5 * np.einsum("ij,nj->ni", J0, lc)
    return float(math.sqrt(np.mean(np.sum(res ** 2, axis=-1)) / np.mean(np.sum(c ** 2, axis=-1))))


def cross_formula_report(orbit: IsospeedReebOrbit, triv: Trivialization) -> dict:
    """Sup-norm differences between the three formulas and their symmetry defects."""
    ops = {tag: assemble(orbit, triv, tag) for tag in FORMULAS}
    s1 = ops["F1_triad"].S
    return {
        "F1_F2": float(np.max(np.abs(s1 - ops["F2_levi_civita"].S))),
        "F1_F3": float(np.max(np.abs(s1 - ops["F3_connection_free"].S))),
        "asymmetry": max(o.asymmetry for o in ops.values()),
        "doubleprime_vs_lieJ": float(np.max(np.abs(
            split_linear_parts(ops["F1_triad"]).A_doubleprime - 0.5 * orbit.action * triv.lie_J_J))),
    }


__all__ = [
    "FORMULAS", "OperatorCoefficients", "LinearParts", "assemble", "constant_operator",
    "connection_free_S", "frame_lie", "lie_J_from_frame", "split_linear_parts",
    "normal_spectrum", "trivial_cylinder_blocks", "eigenfunction_identity_residual",
    "cross_formula_report",
]
