"""Unitary trivializations of gamma^* xi and connection coefficients along the orbit.

Frame conventions: a section eta = E(t) c(t) with E = [e1, e2], e2 = J e1,
g-orthonormal. A connection D along the orbit is represented by Gamma(t)
with (D eta)_frame = c' + Gamma c. Three connections appear:

* the flow connection  D^phi eta = T L_R Y  (pushforward by the Reeb flow),
* the triad (Hermitian) connection  nabla_t = D^phi + (T/2)(L_R J) J,
* the Levi-Civita connection  nabla^LC_t = nabla_t + (T/2) J.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from ._util import J0, rot, spectral_derivative
from .errors import NoFlowError
from .geometry import lie_derivative_J
from .orbits import IsospeedReebOrbit

REORTH_EVERY = 16


@dataclass(frozen=True)
class Trivialization:
    orbit: IsospeedReebOrbit
    frame: np.ndarray
    """(N, d, 2) ambient frame vectors at t_i = i/N."""
    coords: np.ndarray
    """(N, 2, d) rows mapping ambient vectors to frame coordinates (xi part)."""
    monodromy_correction: np.ndarray
    """(N, 2, 2) rotations U(t_i) closing the parallel frame."""
    holonomy_angle: float
    closure_angle: float
    branch: int
    lie_J: np.ndarray
    """(N, 2, 2) frame matrix of L_R J."""
    lie_J_J: np.ndarray
    """(N, 2, 2) frame matrix of (L_R J) J."""
    J_frame: np.ndarray

    @property
    def N(self) -> int:
        return self.frame.shape[0]

    @property
    def closure_generator(self) -> np.ndarray:
        """Gamma of the triad connection in this frame (constant)."""
        return -self.closure_angle * J0

    def metadata(self) -> dict:
        return {"holonomy_angle": self.holonomy_angle, "closure_angle": self.closure_angle,
                "branch": self.branch}


@dataclass(frozen=True)
class ConnectionCoefficients:
    which: str
    Gamma: np.ndarray
    method: str = "lie"


def _wrap(angle: float) -> float:
    """Principal branch in (-pi, pi]."""
    w = math.remainder(angle, 2 * math.pi)
    return math.pi if w == -math.pi else w


def _transport_substeps(orbit, amb_gen_norm, target=0.003):
    return max(1, math.ceil(amb_gen_norm / (orbit.N * target)))


def _frame_coords(triad, pts, frame):
    cols = [frame, triad.reeb_at(pts)[..., None]]
    if triad.normal_at is not None:
        cols.append(triad.normal_at(pts)[..., None])
    basis = np.concatenate(cols, axis=-1)
    return np.linalg.inv(basis)[..., :2, :]


def build_trivialization(orbit: IsospeedReebOrbit, branch: int = 0,
                         start: Optional[np.ndarray] = None,
                         substeps: Optional[int] = None) -> Trivialization:
    """Parallel-transport a unitary frame around the orbit and close it up.

    ``start`` optionally fixes e1(0) (projected to xi and normalized);
    ``branch`` adds 2*pi*branch to the principal closure angle.
    """
    tr = orbit.triad
    if tr.flow is None and tr.lieJ_at is None:
        raise NoFlowError(f"{tr.name}: frames need L_R J")
    T = orbit.action
    n = orbit.N
    p0 = orbit.p0
    probe = orbit.fine_points(8)[:-1]
    lj_probe = lie_derivative_J(tr, probe)
    bound = abs(T) * (np.max(np.linalg.norm(tr.reeb_jac(probe), 2, axis=(-2, -1)))
                      + 0.5 * np.max(np.linalg.norm(lj_probe, 2, axis=(-2, -1))) + 1.0)
    sub = substeps or _transport_substeps(orbit, bound)
    steps = n * sub
    pts = orbit.fine_points(2 * steps)
    jm = tr.J_at(pts)
    lj = lie_derivative_J(tr, pts)
    gen = T * tr.reeb_jac(pts) - 0.5 * T * lj @ jm
    g0 = tr.metric_at(p0)

    e = tr.xi_basis(p0)[:, 0] if start is None else tr.Pi_at(p0) @ np.asarray(start, float)
    e = e / math.sqrt(e @ g0 @ e)
    e_start = e.copy()
    h = 1.0 / steps
    par = np.empty((n, e.size))
    for j in range(steps):
        if j % sub == 0:
            par[j // sub] = e
        a0, a1, a2 = gen[2 * j], gen[2 * j + 1], gen[2 * j + 2]
        k1 = a0 @ e
        k2 = a1 @ (e + 0.5 * h * k1)
        k3 = a1 @ (e + 0.5 * h * k2)
        k4 = a2 @ (e + h * k3)
        e = e + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if (j + 1) % REORTH_EVERY == 0:
            q = pts[2 * j + 2]
            e = tr.Pi_at(q) @ e
            e = e / math.sqrt(e @ tr.metric_at(q) @ e)
    # holonomy: e1(1) expressed in the frame (e1(0), J e1(0))
    e2_start = tr.J_at(p0) @ e_start
    c = np.array([e_start @ g0 @ e, e2_start @ g0 @ e])
    theta = math.atan2(c[1], c[0])
    phi = _wrap(theta) + 2 * math.pi * branch

    t = np.arange(n) / n
    nodes = pts[: 2 * steps : 2 * sub]
    jn = jm[: 2 * steps : 2 * sub]
    e1p = par
    e2p = np.einsum("nij,nj->ni", jn, e1p)
    u = rot(-phi * t)
    e1 = u[:, 0, 0, None] * e1p + u[:, 1, 0, None] * e2p
    e2 = u[:, 0, 1, None] * e1p + u[:, 1, 1, None] * e2p
    frame = np.stack([e1, e2], axis=-1)
    coords = _frame_coords(tr, nodes, frame)
    ljn = lj[: 2 * steps : 2 * sub]
    lie = coords @ ljn @ frame
    lie_j = coords @ (ljn @ jn) @ frame
    jf = coords @ jn @ frame
    return Trivialization(orbit, frame, coords, u, float(theta), float(phi), branch,
                          lie, lie_j, jf)


def flow_connection(orbit: IsospeedReebOrbit, triv: Trivialization) -> np.ndarray:
    """Gamma^phi: frame matrix of D^phi eta = eta' - T DR eta (spectral derivative)."""
    pts = orbit.samples
    de = spectral_derivative(triv.frame)
    de = de - orbit.action * orbit.triad.reeb_jac(pts) @ triv.frame
    return triv.coords @ de


def connection_coefficients(orbit: IsospeedReebOrbit, triv: Trivialization,
                            which: str = "triad", method: str = "lie") -> ConnectionCoefficients:
    """Connection coefficients of the triad, Levi-Civita or flow connection.

    ``method="lie"`` evaluates the triad connection as
    T (L_R Y + (1/2)(L_R J) J Y) on the frame fields; ``method="transport"``
    uses the constant closure generator produced by parallel transport.
    """
    n = triv.N
    T = orbit.action
    if which == "flow":
        return ConnectionCoefficients("flow", flow_connection(orbit, triv), "lie")
    if method == "transport":
        gamma = np.broadcast_to(triv.closure_generator, (n, 2, 2)).copy()
    elif method == "lie":
        gamma = flow_connection(orbit, triv) + 0.5 * T * triv.lie_J_J
    else:
        raise ValueError(f"unknown method {method!r}")
    if which == "triad":
        return ConnectionCoefficients("triad", gamma, method)
    if which == "levi_civita":
        return ConnectionCoefficients("levi_civita", gamma + 0.5 * T * J0, method)
    raise ValueError(f"unknown connection {which!r}")


def frame_residuals(triv: Trivialization) -> dict:
    """Orthonormality and J-constancy of the stored frame."""
    tr = triv.orbit.triad
    pts = triv.orbit.samples
    g = tr.metric_at(pts)
    gram = np.swapaxes(triv.frame, -1, -2) @ g @ triv.frame
    return {
        "orthonormal": float(np.max(np.abs(gram - np.eye(2)))),
        "J_constant": float(np.max(np.abs(triv.J_frame - J0))),
    }


def _smooth_xi_frame(triad, pts, pair):
    """Unitary xi-frame from projecting two constant ambient vectors (smooth near ``pts``)."""
    e = np.zeros(pts.shape[:-1] + (triad.chart_dim, 2))
    e[..., pair[0], 0] = 1.0
    e[..., pair[1], 1] = 1.0
    v = triad.Pi_at(pts) @ e
    g = triad.metric_at(pts)
    dl = triad.dlambda_at(pts)

    def inner(x, y, m):
        return np.einsum("...i,...ij,...j->...", x, m, y)

    u1 = v[..., 0] / np.sqrt(inner(v[..., 0], v[..., 0], g))[..., None]
    u2 = triad.J_at(pts) @ u1[..., None]
    u2 = u2[..., 0]
    s = 1.0 / np.sqrt(inner(u1, u2, dl))
    return np.stack([u1 * s[..., None], u2 * s[..., None]], axis=-1)


def _fd_jacobian(f, pts, h):
    cols = []
    for k in range(pts.shape[-1]):
        e = np.zeros(pts.shape[-1])
        e[k] = h
        cols.append((8 * (f(pts + e) - f(pts - e)) - (f(pts + 2 * e) - f(pts - 2 * e))) / (12 * h))
    return np.stack(cols, axis=-1)


def koszul_connection_gap(orbit: IsospeedReebOrbit, h: float = 1e-4) -> np.ndarray:
    """T (omega_LC - omega_triad) along the orbit, computed from the ambient fields.

    omega_LC comes from the Koszul formula for the triad metric and omega_triad
    from D_R Y = [R, Y] + (1/2)(L_R J) J Y, both in a smooth unitary frame
    obtained by projecting constant vectors onto xi (brackets by a 4th-order
    finite-difference Jacobian with step ``h``). The difference is a tensor,
    so its frame matrix does not depend on the unitary frame chosen.
    """
    tr = orbit.triad
    pts = orbit.samples
    T = orbit.action
    pairs = list(combinations(range(tr.chart_dim), 2))
    conds = [np.min(np.linalg.svd(tr.Pi_at(pts)[..., list(pr)], compute_uv=False)[..., -1])
             for pr in pairs]
    pair = pairs[int(np.argmax(conds))]

    def field(q):
        return _smooth_xi_frame(tr, q, pair)

    u = field(pts)
    du = _fd_jacobian(field, pts, h)  # (n, d, 2, d)
    reeb = tr.reeb_at(pts)
    dr = tr.reeb_jac(pts)
    g = tr.metric_at(pts)
    lam = tr.lambda_at(pts)
    # [R, u_b] and [u_1, u_2]
    br = [np.einsum("nik,nk->ni", du[:, :, b, :], reeb) - np.einsum("nik,nk->ni", dr, u[..., b])
          for b in range(2)]
    br12 = np.einsum("nik,nk->ni", du[:, :, 1, :], u[..., 0]) \
        - np.einsum("nik,nk->ni", du[:, :, 0, :], u[..., 1])
    lam12 = np.einsum("ni,ni->n", lam, br12)

    def G(x, y):
        return np.einsum("ni,nij,nj->n", x, g, y)

    lj = lie_derivative_J(tr, pts) @ tr.J_at(pts)
    om_lc = np.zeros((len(pts), 2, 2))
    om_t = np.zeros_like(om_lc)
    for a in range(2):
        for b in range(2):
            lab = (b - a) * lam12
            om_lc[:, a, b] = 0.5 * (G(br[b], u[..., a]) - G(br[a], u[..., b]) + lab)
            om_t[:, a, b] = G(br[b] + 0.5 * np.einsum("nij,nj->ni", lj, u[..., b]), u[..., a])
    return T * (om_lc - om_t)
