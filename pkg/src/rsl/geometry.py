"""Contact triads (Q, lambda, J) on explicit manifolds as evaluable fields.

Points are ambient coordinates (R^3 or R^4 = C^2 with ordering
``(x1, y1, x2, y2)``). All field callables accept a batch of points with
shape ``(..., chart_dim)`` and broadcast over the leading axes.
Endomorphisms are ambient square matrices that annihilate the Reeb
direction and (for hypersurfaces) the Euclidean normal direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from .errors import NoFlowError

J2 = np.array([[0.0, -1.0], [1.0, 0.0]])

#: step used for the finite-difference Lie derivative of J
LIE_STEP = 1e-4
ON_SURFACE_TOL = 1e-9

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ContactTriad:
    name: str
    chart_dim: int
    manifold_dim: int
    lambda_at: Field
    dlambda_at: Field
    reeb_at: Field
    reeb_jac: Field
    xi_basis: Field
    """Oriented basis (..., d, 2) of xi, orthonormal for dlambda(., J.)."""
    normal_at: Optional[Field] = None
    level_at: Optional[Field] = None
    """Defining function of the hypersurface (zero on the manifold)."""
    project: Optional[Field] = None
    flow: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    flow_jac: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    lieJ_at: Optional[Field] = None
    params: dict = field(default_factory=dict)

    def frame_basis(self, p):
        """Ambient basis ``[e1, e2, R, (n)]`` as columns, shape (..., d, d)."""
        p = np.asarray(p, dtype=float)
        cols = [self.xi_basis(p), self.reeb_at(p)[..., None]]
        if self.normal_at is not None:
            cols.append(self.normal_at(p)[..., None])
        return np.concatenate(cols, axis=-1)

    def _split(self, p):
        b = self.frame_basis(p)
        binv = np.linalg.inv(b)
        return b[..., :, :2], binv[..., :2, :]

    def Pi_at(self, p):
        """Projector onto xi along the Reeb (and normal) directions."""
        u, dual = self._split(p)
        return u @ dual

    def J_at(self, p):
        u, dual = self._split(p)
        return u @ J2 @ dual

    def metric_at(self, p):
        """Triad metric g = dlambda(., J.) + lambda (x) lambda as an ambient matrix."""
        lam = self.lambda_at(p)
        return self.dlambda_at(p) @ self.J_at(p) + lam[..., :, None] * lam[..., None, :]

    def xi_coords(self, p):
        """Rows mapping an ambient vector to its coordinates in ``xi_basis``."""
        return self._split(p)[1]

    def on_surface(self, p):
        return self.project(p) if self.project is not None else np.asarray(p, dtype=float)


# ---------------------------------------------------------------------------
# ellipsoid E(a, b) in C^2


def _std_dlambda(dim):
    w = np.zeros((dim, dim))
    for k in range(0, dim, 2):
        w[k, k + 1] = 1.0
        w[k + 1, k] = -1.0
    return w


def _oriented_gram_schmidt(v, metric, dlam):
    """Metric-orthonormalize two columns of v and orient them by dlam."""
    def inner(x, y):
        return np.einsum("...i,...ij,...j->...", x, metric, y)

    v1, v2 = v[..., 0], v[..., 1]
    u1 = v1 / np.sqrt(inner(v1, v1))[..., None]
    w2 = v2 - inner(u1, v2)[..., None] * u1
    u2 = w2 / np.sqrt(inner(w2, w2))[..., None]
    sign = np.sign(np.einsum("...i,ij,...j->...", u1, dlam, u2))
    u2 = u2 * sign[..., None]
    # rescale so that dlambda(u1, u2) = 1, i.e. g-orthonormal for g = dlambda(., J.)
    om = np.einsum("...i,ij,...j->...", u1, dlam, u2)
    s = 1.0 / np.sqrt(om)
    return np.stack([u1 * s[..., None], u2 * s[..., None]], axis=-1)


def make_ellipsoid(a: float, b: float, twist: float = 0.0, wavenumber: float = 12.0) -> ContactTriad:
    """Triad on E(a,b) = {pi|z1|^2/a + pi|z2|^2/b = 1} with the standard Liouville form.

    ``J`` is the quarter turn on xi for the Euclidean metric (``twist=0``),
    which is the ambient complex structure wherever xi is a complex line
    (principal circles, the whole round sphere). A nonzero ``twist`` in
    (-1, 1) deforms the metric defining the quarter turn by
    ``tau*(cos(k x1) diag(0,0,1,-1) + cos(k x2) diag(1,-1,0,0))``, which is
    not flow invariant and makes L_R J nonzero along the principal orbits.
    """
    if a <= 0 or b <= 0:
        raise ValueError(f"ellipsoid parameters must be positive, got a={a}, b={b}")
    if not -1.0 < twist < 1.0:
        raise ValueError("twist must lie in (-1, 1)")
    w = _std_dlambda(4)
    freqs = np.array([2 * np.pi / a, 2 * np.pi / a, 2 * np.pi / b, 2 * np.pi / b])
    gen = np.zeros((4, 4))
    gen[0, 1], gen[1, 0] = -2 * np.pi / a, 2 * np.pi / a
    gen[2, 3], gen[3, 2] = -2 * np.pi / b, 2 * np.pi / b

    def ham(p):
        return 0.5 * np.einsum("...i,i,...i->...", p, freqs, p)

    def lambda_at(p):
        p = np.asarray(p, dtype=float)
        return 0.5 * np.stack([-p[..., 1], p[..., 0], -p[..., 3], p[..., 2]], axis=-1)

    def dlambda_at(p):
        p = np.asarray(p, dtype=float)
        return np.broadcast_to(w, p.shape[:-1] + (4, 4)).copy()

    def reeb_at(p):
        return np.asarray(p, dtype=float) @ gen.T

    def reeb_jac(p):
        p = np.asarray(p, dtype=float)
        return np.broadcast_to(gen, p.shape[:-1] + (4, 4)).copy()

    def normal_at(p):
        return np.asarray(p, dtype=float) * freqs

    def metric(p):
        g = np.broadcast_to(np.eye(4), p.shape[:-1] + (4, 4)).copy()
        if twist:
            c1 = twist * np.cos(wavenumber * p[..., 0])
            c2 = twist * np.cos(wavenumber * p[..., 2])
            g[..., 0, 0] += c2
            g[..., 1, 1] -= c2
            g[..., 2, 2] += c1
            g[..., 3, 3] -= c1
        return g

    def xi_basis(p):
        p = np.asarray(p, dtype=float)
        cons = np.stack([lambda_at(p), normal_at(p)], axis=-2)
        _, _, vh = np.linalg.svd(cons)
        v = np.swapaxes(vh[..., 2:, :], -1, -2)
        return _oriented_gram_schmidt(v, metric(p), w)

    def project(p):
        p = np.asarray(p, dtype=float)
        return p / np.sqrt(ham(p))[..., None]

    def flow_jac(p, t):
        p = np.asarray(p, dtype=float)
        m = np.zeros((4, 4))
        for k, f in ((0, 2 * np.pi / a), (2, 2 * np.pi / b)):
            c, s = np.cos(f * t), np.sin(f * t)
            m[k:k + 2, k:k + 2] = [[c, -s], [s, c]]
        return np.broadcast_to(m, p.shape[:-1] + (4, 4)).copy()

    def flow(p, t):
        return np.asarray(p, dtype=float) @ flow_jac(np.zeros(4), t).T

    name = f"ellipsoid({a:g},{b:g})" + (f"+twist{twist:g}" if twist else "")
    return ContactTriad(
        name=name, chart_dim=4, manifold_dim=3,
        lambda_at=lambda_at, dlambda_at=dlambda_at, reeb_at=reeb_at, reeb_jac=reeb_jac,
        xi_basis=xi_basis, normal_at=normal_at, level_at=lambda p: ham(p) - 1.0, project=project, flow=flow, flow_jac=flow_jac,
        params={"kind": "ellipsoid", "a": float(a), "b": float(b), "twist": float(twist),
                "wavenumber": float(wavenumber)},
    )


def make_standard_r3() -> ContactTriad:
    """lambda = dz - y dx on R^3 with R = d/dz and J(d/dx + y d/dz) = d/dy."""

    def lambda_at(p):
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape)
        out[..., 0] = -p[..., 1]
        out[..., 2] = 1.0
        return out

    def dlambda_at(p):
        p = np.asarray(p, dtype=float)
        w = np.zeros(p.shape[:-1] + (3, 3))
        w[..., 0, 1] = 1.0
        w[..., 1, 0] = -1.0
        return w

    def reeb_at(p):
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape)
        out[..., 2] = 1.0
        return out

    def reeb_jac(p):
        return np.zeros(np.asarray(p).shape[:-1] + (3, 3))

    def xi_basis(p):
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape[:-1] + (3, 2))
        out[..., 0, 0] = 1.0
        out[..., 2, 0] = p[..., 1]
        out[..., 1, 1] = 1.0
        return out

    def flow(p, t):
        return np.asarray(p, dtype=float) + np.array([0.0, 0.0, t])

    def flow_jac(p, t):
        return np.broadcast_to(np.eye(3), np.asarray(p).shape[:-1] + (3, 3)).copy()

    return ContactTriad(
        name="standard_r3", chart_dim=3, manifold_dim=3,
        lambda_at=lambda_at, dlambda_at=dlambda_at, reeb_at=reeb_at, reeb_jac=reeb_jac,
        xi_basis=xi_basis, flow=flow, flow_jac=flow_jac, params={"kind": "r3"},
    )


# ---------------------------------------------------------------------------
# Lie derivative of J along the Reeb flow


def _pullback_J(triad, p, s):
    q = triad.flow(p, s)
    return triad.flow_jac(q, -s) @ triad.J_at(q) @ triad.flow_jac(p, s)


def lie_derivative_J(triad: ContactTriad, p, h: float = LIE_STEP, richardson: bool = True) -> np.ndarray:
    """L_R J at p, as an ambient endomorphism restricted to xi.

    Uses the analytic override when installed, otherwise the central
    difference of ``dphi_{-s} J(phi_s p) dphi_s`` in s with one Richardson
    level.
    """
    p = triad.on_surface(p)
    if triad.lieJ_at is not None:
        return triad.lieJ_at(p)
    if triad.flow is None or triad.flow_jac is None:
        raise NoFlowError(f"{triad.name}: no flow and no analytic L_R J")

    def central(step):
        return (_pullback_J(triad, p, step) - _pullback_J(triad, p, -step)) / (2 * step)

    d = central(h)
    if richardson:
        d = (4.0 * central(h / 2) - d) / 3.0
    pi = triad.Pi_at(p)
    return pi @ d @ pi


# ---------------------------------------------------------------------------
# pointwise identity checks

RESIDUAL_NAMES = (
    "lambda_R",
    "reeb_dlambda",
    "J_squared",
    "compatibility",
    "metric",
    "lieJ_anticommute",
    "lieJ_symmetric",
)


@dataclass
class PointReport:
    point: np.ndarray
    residuals: dict
    passed: bool


def _sym_defect_and_negativity(m):
    asym = np.linalg.norm(m - np.swapaxes(m, -1, -2), axis=(-2, -1))
    low = np.linalg.eigvalsh(0.5 * (m + np.swapaxes(m, -1, -2)))[..., 0]
    return np.maximum(asym, np.maximum(-low, 0.0))


def triad_residuals(triad: ContactTriad, points) -> dict:
    """Vectorized residuals of all triad identities at a batch of points."""
    p = triad.on_surface(np.atleast_2d(points))
    lam = triad.lambda_at(p)
    w = triad.dlambda_at(p)
    r = triad.reeb_at(p)
    jm = triad.J_at(p)
    pi = triad.Pi_at(p)
    b = triad.frame_basis(p)
    tangent = b[..., :, :3]
    res = {}
    res["lambda_R"] = np.abs(np.einsum("...i,...i->...", lam, r) - 1.0)
    res["reeb_dlambda"] = np.linalg.norm(np.einsum("...i,...ij,...jk->...k", r, w, tangent), axis=-1)
    res["J_squared"] = np.linalg.norm(jm @ jm + pi, axis=(-2, -1))
    u = b[..., :, :2]
    ut = np.swapaxes(u, -1, -2)
    res["compatibility"] = _sym_defect_and_negativity(ut @ w @ jm @ u)
    g = triad.metric_at(p)
    res["metric"] = _sym_defect_and_negativity(np.swapaxes(tangent, -1, -2) @ g @ tangent)
    lj = lie_derivative_J(triad, p)
    res["lieJ_anticommute"] = np.linalg.norm(pi @ (lj @ jm + jm @ lj) @ pi, axis=(-2, -1))
    coords = triad.xi_coords(p)
    lj_f = coords @ lj @ u
    ljj_f = coords @ (lj @ jm) @ u
    res["lieJ_symmetric"] = np.maximum(
        np.linalg.norm(lj_f - np.swapaxes(lj_f, -1, -2), axis=(-2, -1)),
        np.linalg.norm(ljj_f - np.swapaxes(ljj_f, -1, -2), axis=(-2, -1)),
    )
    return res


def check_triad(triad: ContactTriad, points, tol: float = 1e-10, lie_tol: Optional[float] = None):
    """Evaluate every triad identity at each point.

    ``lie_tol`` applies to the two Lie-derivative residuals (defaults to
    ``tol``); a point passes iff every residual is within its tolerance.
    """
    lie_tol = tol if lie_tol is None else lie_tol
    pts = triad.on_surface(np.atleast_2d(points))
    res = triad_residuals(triad, pts)
    reports = []
    for i, pt in enumerate(pts):
        vals = {k: float(res[k][i]) for k in RESIDUAL_NAMES}
        ok = all(v <= (lie_tol if k.startswith("lieJ") else tol) for k, v in vals.items())
        reports.append(PointReport(point=pt, residuals=vals, passed=ok))
    return reports


def sample_points(triad: ContactTriad, n: int, seed: int = 0) -> np.ndarray:
    """Quasi-random points on the manifold (Halton in a box, projected)."""
    sampler = qmc.Halton(d=triad.chart_dim, seed=seed)
    box = 2.0 * sampler.random(n) - 1.0
    if triad.project is None:
        return 3.0 * box
    # keep away from the origin before radial projection
    box[np.linalg.norm(box, axis=1) < 1e-3] += 0.5
    return triad.project(box)


def with_J_defect(triad: ContactTriad, defect: np.ndarray) -> ContactTriad:
    """Copy of ``triad`` whose J is ``Pi J Pi + defect`` (fault injection)."""
    base = triad

    class _Faulty(ContactTriad):
        def J_at(self, p):
            pi = base.Pi_at(p)
            return pi @ base.J_at(p) @ pi + defect

    return _Faulty(**{f: getattr(base, f) for f in base.__dataclass_fields__})
