import math

import numpy as np
import pytest

from rsl.errors import NotClosedError, StepCountError
from rsl.orbits import integrate_orbit, linearized_return_map, orbit_residuals, principal_orbits

from _cases import SQRT2, triad


def test_principal_actions_and_covers():
    o = principal_orbits(triad("ellipsoid"), 1, N=128)
    assert [x.label for x in o] == ["short", "long"]
    assert o[0].action == pytest.approx(1.0, abs=1e-12)
    assert o[1].action == pytest.approx(SQRT2, abs=1e-12)
    o2 = principal_orbits(triad("round"), 2, N=64)
    assert [x.action for x in o2] == pytest.approx([1, 1, 2, 2])
    assert [x.cover for x in o2] == [1, 1, 2, 2]


def test_max_cover_zero():
    assert principal_orbits(triad("round"), 0) == []


@pytest.mark.parametrize("name", ["ellipsoid", "twisted"])
def test_action_by_quadrature(name):
    for o in principal_orbits(triad(name), 2, N=128):
        r = orbit_residuals(o)
        assert r["action_quadrature"] <= 1e-10
        assert r["isospeed"] <= 1e-9
        assert r["closure"] <= 1e-12


def test_integrate_short_circle():
    p0 = np.array([1.0, 0.0, 0.0, 0.0]) / math.sqrt(math.pi)
    o = integrate_orbit(triad("ellipsoid"), p0, 1.0, N=256)
    assert o.action == pytest.approx(1.0, abs=1e-9)
    assert o.closure_residual <= 1e-7


def test_integrate_round_generic_point():
    tr = triad("round")
    p0 = tr.project(np.array([0.3, -0.7, 0.5, 0.2]))
    o = integrate_orbit(tr, p0, 1.0, N=128)
    assert o.action == pytest.approx(1.0, abs=1e-9)


def test_integrate_irrational_torus_line_fails():
    tr = triad("ellipsoid")
    p0 = tr.project(np.array([0.3, -0.7, 0.5, 0.2]))
    with pytest.raises(NotClosedError):
        integrate_orbit(tr, p0, 1.0, N=128)


def test_step_count_too_small():
    with pytest.raises(StepCountError):
        integrate_orbit(triad("round"), np.array([1.0, 0, 0, 0]), 1.0, N=4)


def test_return_map_short_is_rotation():
    o = principal_orbits(triad("ellipsoid"), 1, N=256)[0]
    rm = linearized_return_map(o)
    assert rm.trace == pytest.approx(2 * math.cos(2 * math.pi / SQRT2), abs=1e-8)
    assert rm.nondegenerate


def test_return_map_hopf_identity():
    o = principal_orbits(triad("round"), 1, N=128)[0]
    rm = linearized_return_map(o)
    np.testing.assert_allclose(rm.matrix, np.eye(2), atol=1e-8)
    assert not rm.nondegenerate


@pytest.mark.parametrize("name", ["ellipsoid", "twisted", "round"])
def test_return_map_symplectic(name):
    for o in principal_orbits(triad(name), 2, N=128):
        assert np.linalg.det(linearized_return_map(o).matrix) == pytest.approx(1.0, abs=1e-8)


def test_reparameterization_consistency():
    tr = triad("twisted")
    a = principal_orbits(tr, 1, N=128)[0]
    b = principal_orbits(tr, 1, N=256)[0]
    assert abs(a.action - b.action) <= 1e-10
    ma, mb = linearized_return_map(a).matrix, linearized_return_map(b).matrix
    assert np.max(np.abs(ma - mb)) <= 1e-8


@pytest.mark.parametrize("label", [0, 1])
def test_cover_law(label):
    o = principal_orbits(triad("ellipsoid"), 3, N=128)
    m1 = linearized_return_map(o[label]).matrix
    for k in (2, 3):
        mk = linearized_return_map(o[2 * (k - 1) + label]).matrix
        assert np.max(np.abs(mk - np.linalg.matrix_power(m1, k))) <= 1e-7
