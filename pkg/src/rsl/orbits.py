"""Isospeed closed Reeb orbits, their actions and linearized return maps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._util import spectral_derivative, trig_resample
from .errors import NotClosedError, StepCountError
from .geometry import ContactTriad

CLOSURE_TOL = 1e-7
NONDEGENERACY_TOL = 1e-6


@dataclass(frozen=True)
class IsospeedReebOrbit:
    """A period-1 loop with gamma' = T R(gamma), sampled at t_i = i/N."""

    triad: ContactTriad
    samples: np.ndarray
    action: float
    cover: int = 1
    label: str = ""
    closure_residual: float = 0.0

    @property
    def N(self) -> int:
        return self.samples.shape[0]

    @property
    def p0(self) -> np.ndarray:
        return self.samples[0]

    def fine_points(self, m: int) -> np.ndarray:
        """gamma at t_j = j/m, j = 0..m (endpoint included)."""
        if self.triad.flow is not None:
            t = np.arange(m + 1) / m
            return np.stack([self.triad.flow(self.p0, self.action * tj) for tj in t])
        pts = trig_resample(self.samples, m)
        return np.concatenate([pts, pts[:1]], axis=0)

    def with_samples(self, n: int) -> "IsospeedReebOrbit":
        """Same orbit sampled on n points."""
        if self.triad.flow is None and n < self.N:
            raise ValueError("cannot coarsen a sampled orbit without a flow")
        return IsospeedReebOrbit(self.triad, self.fine_points(n)[:-1], self.action, self.cover,
                                 self.label, self.closure_residual)


@dataclass(frozen=True)
class ReturnMapData:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    nondegenerate: bool

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))


def principal_orbits(triad: ContactTriad, max_cover: int, N: int = 256):
    """The circles {z2=0} and {z1=0} of an ellipsoid and their covers up to ``max_cover``.

    Ordered by cover: [short k=1, long k=1, short k=2, ...], where "short"
    is the z1-circle (action k*a) and "long" the z2-circle (action k*b).
    """
    if triad.params.get("kind") != "ellipsoid":
        raise ValueError("principal_orbits needs an ellipsoid triad")
    a, b = triad.params["a"], triad.params["b"]
    t = np.arange(N) / N
    out = []
    for k in range(1, max_cover + 1):
        for label, area, slot in (("short", a, 0), ("long", b, 2)):
            pts = np.zeros((N, 4))
            r = math.sqrt(area / math.pi)
            pts[:, slot] = r * np.cos(2 * np.pi * k * t)
            pts[:, slot + 1] = r * np.sin(2 * np.pi * k * t)
            out.append(IsospeedReebOrbit(triad, pts, k * area, k, label))
    return out


def _rk4_flow(triad: ContactTriad, p0, T, steps):
    """Integrate gamma' = T R(gamma) with the variational equation over [0, 1]."""
    h = 1.0 / steps
    d = p0.size

    def rhs(y, v):
        return T * triad.reeb_at(y), T * triad.reeb_jac(y) @ v

    y = np.array(p0, dtype=float)
    v = np.eye(d)
    traj = [y]
    for _ in range(steps):
        k1y, k1v = rhs(y, v)
        k2y, k2v = rhs(y + 0.5 * h * k1y, v + 0.5 * h * k1v)
        k3y, k3v = rhs(y + 0.5 * h * k2y, v + 0.5 * h * k2v)
        k4y, k4v = rhs(y + h * k3y, v + h * k3v)
        y = y + (h / 6) * (k1y + 2 * k2y + 2 * k3y + k4y)
        v = v + (h / 6) * (k1v + 2 * k2v + 2 * k3v + k4v)
        traj.append(y)
    return np.array(traj), v


def _substeps(triad, p0, T, N, target=0.01):
    omega = abs(T) * max(np.linalg.norm(triad.reeb_jac(p0), 2), 1.0)
    return max(1, math.ceil(omega / (N * target)))


def integrate_orbit(triad: ContactTriad, p0, T_guess: float, N: int = 256,
                    max_iter: int = 10, tol: float = CLOSURE_TOL,
                    trust: float = 0.05) -> IsospeedReebOrbit:
    """RK4 integration of gamma' = T R(gamma) with Gauss-Newton closure on (p0, T).

    The Newton system appends the level-set constraint and a phase condition
    orthogonal to the flow; at most ``max_iter`` iterations are taken. The
    refinement may move p0 by at most ``trust`` times its norm (and T by the
    same fraction), so a non-closing guess is reported instead of being
    dragged onto some distant closed orbit.
    """
    if N < 8:
        raise StepCountError(f"N={N} too small (need >= 8)")
    p = triad.on_surface(np.asarray(p0, dtype=float))
    anchor = p.copy()
    phase_dir = triad.reeb_at(anchor)
    T = float(T_guess)
    sub = _substeps(triad, p, T, N)
    first = None
    for _ in range(max_iter + 1):
        traj, var = _rk4_flow(triad, p, T, N * sub)
        end = traj[-1]
        if first is None:
            first = float(np.linalg.norm(end - p))
        if (np.linalg.norm(p - anchor) > trust * np.linalg.norm(anchor)
                or abs(T - T_guess) > trust * abs(T_guess)):
            raise NotClosedError(first)
        rows = [end - p]
        jac = [np.hstack([var - np.eye(p.size), triad.reeb_at(end)[:, None]])]
        if triad.level_at is not None:
            rows.append(np.atleast_1d(triad.level_at(p)))
            jac.append(np.hstack([triad.normal_at(p), [0.0]])[None, :])
        rows.append(np.atleast_1d(phase_dir @ (p - anchor)))
        jac.append(np.hstack([phase_dir, [0.0]])[None, :])
        res = np.concatenate(rows)
        if np.linalg.norm(res) <= 1e-13:
            break
        step = np.linalg.lstsq(np.vstack(jac), -res, rcond=1e-10)[0]
        p = p + step[:-1]
        T = T + step[-1]
    closure = float(np.linalg.norm(traj[-1] - traj[0]))
    if closure > tol:
        raise NotClosedError(closure)
    return IsospeedReebOrbit(triad, traj[:-1:sub].copy(), T, 1, "integrated", closure)


def orbit_residuals(orbit: IsospeedReebOrbit) -> dict:
    """Isospeed, closure and action residuals of a sampled orbit."""
    tr = orbit.triad
    vel = spectral_derivative(orbit.samples)
    isospeed = np.max(np.linalg.norm(vel - orbit.action * tr.reeb_at(orbit.samples), axis=-1))
    lam = tr.lambda_at(orbit.samples)
    action_q = float(np.mean(np.einsum("ij,ij->i", lam, vel)))
    closure = orbit.closure_residual
    if tr.flow is not None:
        closure = float(np.linalg.norm(tr.flow(orbit.p0, orbit.action) - orbit.p0))
    return {"isospeed": float(isospeed), "closure": closure,
            "action_quadrature": abs(action_q - orbit.action), "action": action_q}


def linearized_return_map(orbit: IsospeedReebOrbit, steps: Optional[int] = None) -> ReturnMapData:
    """dphi^T restricted to xi at gamma(0), in a g-orthonormal J-frame there.

    Integrates V' = T DR(gamma(t)) V with RK4 along the orbit.
    """
    tr = orbit.triad
    T = orbit.action
    if steps is None:
        steps = orbit.N * _substeps(tr, orbit.p0, T, orbit.N)
    pts = orbit.fine_points(2 * steps)
    jacs = T * tr.reeb_jac(pts)
    h = 1.0 / steps
    v = np.eye(pts.shape[1])
    for j in range(steps):
        a0, a1, a2 = jacs[2 * j], jacs[2 * j + 1], jacs[2 * j + 2]
        k1 = a0 @ v
        k2 = a1 @ (v + 0.5 * h * k1)
        k3 = a1 @ (v + 0.5 * h * k2)
        k4 = a2 @ (v + h * k3)
        v = v + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    u = tr.xi_basis(orbit.p0)
    mat = tr.xi_coords(orbit.p0) @ v @ u
    eig = np.linalg.eigvals(mat)
    return ReturnMapData(mat, eig, bool(np.all(np.abs(eig - 1.0) > NONDEGENERACY_TOL)))
