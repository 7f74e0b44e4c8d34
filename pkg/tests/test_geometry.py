import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rsl.errors import NoFlowError
from rsl.geometry import (RESIDUAL_NAMES, check_triad, lie_derivative_J, make_ellipsoid,
                          make_standard_r3, sample_points, triad_residuals, with_J_defect)

from _cases import SQRT2, triad


def test_nonpositive_parameter_rejected():
    with pytest.raises(ValueError):
        make_ellipsoid(1, -1)
    with pytest.raises(ValueError):
        make_ellipsoid(0, 1)


def test_round_flow_is_hopf_action():
    tr = triad("round")
    p = sample_points(tr, 5, seed=3)
    t = 0.37
    z = p[:, 0::2] + 1j * p[:, 1::2]
    w = tr.flow(p, t)
    np.testing.assert_allclose(w[:, 0::2] + 1j * w[:, 1::2], np.exp(2j * np.pi * t) * z, atol=1e-14)


def test_r3_reeb_normalization():
    tr = make_standard_r3()
    assert tr.lambda_at(np.zeros(3)) @ tr.reeb_at(np.zeros(3)) == pytest.approx(1.0)
    p = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(tr.reeb_at(p) @ tr.dlambda_at(p), 0.0, atol=0)


def test_r3_J_squared():
    tr = make_standard_r3()
    p = np.random.default_rng(1).normal(size=3)
    J = tr.J_at(p)
    assert np.max(np.abs(J @ J + tr.Pi_at(p))) <= 1e-12


def test_lie_J_vanishes_on_round_sphere():
    tr = triad("round")
    p = sample_points(tr, 20, seed=2)
    assert np.max(np.abs(lie_derivative_J(tr, p))) <= 1e-8


def test_lie_J_vanishes_on_r3():
    tr = make_standard_r3()
    p = np.random.default_rng(0).normal(size=(5, 3))
    assert np.max(np.abs(lie_derivative_J(tr, p))) <= 1e-10


def test_lie_J_on_twisted_short_orbit():
    tr = triad("twisted")
    t = np.linspace(0, 1, 7, endpoint=False)
    p = np.stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t), 0 * t, 0 * t], axis=-1) / math.sqrt(math.pi)
    lj = lie_derivative_J(tr, p)
    J = tr.J_at(p)
    assert np.max(np.linalg.norm(lj, axis=(-2, -1))) > 1.0
    assert np.max(np.abs(lj @ J + J @ lj)) <= 1e-8


def test_lie_J_needs_flow():
    tr = make_standard_r3()
    bare = type(tr)(**{**{f: getattr(tr, f) for f in tr.__dataclass_fields__}, "flow": None})
    with pytest.raises(NoFlowError):
        lie_derivative_J(bare, np.zeros(3))


@pytest.mark.parametrize("name", ["ellipsoid", "round", "twisted"])
def test_check_triad_halton_points(name):
    tr = triad(name)
    reps = check_triad(tr, sample_points(tr, 100, seed=0), tol=1e-10, lie_tol=1e-6)
    assert len(reps) == 100
    assert all(r.passed for r in reps), max(max(r.residuals.values()) for r in reps)


def test_check_triad_poles_and_equator():
    tr = triad("round")
    c = 1 / math.sqrt(math.pi)
    pts = np.array([[c, 0, 0, 0], [0, 0, c, 0], [0, c, 0, 0], [c, 0, c, 0] / np.float64(math.sqrt(2)),
                    [0, c, 0, c] / np.float64(math.sqrt(2))])
    assert all(r.passed for r in check_triad(tr, pts, tol=1e-10, lie_tol=1e-6))


def test_injected_defect_is_reported():
    tr = triad("ellipsoid")
    defect = np.zeros((4, 4))
    defect[0, 2] = 1e-3
    faulty = with_J_defect(tr, defect)
    reps = check_triad(faulty, sample_points(tr, 10, seed=1), tol=1e-10, lie_tol=1e-6)
    assert not any(r.passed for r in reps)
    worst = max(r.residuals["J_squared"] for r in reps)
    assert 1e-4 <= worst <= 1e-2


def test_lie_J_fd_convergence_order():
    tr = triad("twisted")
    p = sample_points(tr, 4, seed=5)
    ref = lie_derivative_J(tr, p, h=1e-4, richardson=True)
    d1 = np.max(np.abs(lie_derivative_J(tr, p, h=2e-3, richardson=False) - ref))
    d2 = np.max(np.abs(lie_derivative_J(tr, p, h=1e-3, richardson=False) - ref))
    assert d1 / d2 >= 3.5


@given(seed=st.integers(0, 10_000), name=st.sampled_from(["ellipsoid", "twisted", "round"]))
def test_triad_identities_property(seed, name):
    tr = triad(name)
    res = triad_residuals(tr, sample_points(tr, 8, seed=seed))
    for k in RESIDUAL_NAMES:
        tol = 1e-6 if k.startswith("lieJ") else 1e-10
        assert np.max(res[k]) <= tol, k


@given(seed=st.integers(0, 10_000))
def test_K_is_g_self_adjoint(seed):
    tr = triad("twisted")
    p = sample_points(tr, 6, seed=seed)
    K = lie_derivative_J(tr, p) @ tr.J_at(p)
    u = tr.xi_basis(p)
    kf = tr.xi_coords(p) @ K @ u
    gf = np.swapaxes(u, -1, -2) @ tr.metric_at(p) @ u
    # g-adjoint of K on xi is gf^-1 kf^T gf
    adj = np.linalg.solve(gf, np.swapaxes(kf, -1, -2) @ gf)
    assert np.max(np.abs(kf - adj)) <= 1e-8


def test_ellipsoid_actions():
    from rsl.orbits import principal_orbits

    o = principal_orbits(make_ellipsoid(1, SQRT2), 1, N=128)
    assert [round(x.action, 12) for x in o] == [1.0, round(SQRT2, 12)]
