import math

import numpy as np
import pytest

from rsl._util import J0, rot
from rsl.frames import (build_trivialization, connection_coefficients, flow_connection,
                        frame_residuals, koszul_connection_gap)
from rsl.orbits import principal_orbits

from _cases import SQRT2, orbit, triad, triv

CASES = [("round", "short"), ("ellipsoid", "short"), ("ellipsoid", "long"),
         ("twisted", "short"), ("twisted", "long"), ("twisted_round", "short")]


def wrap(x):
    return math.remainder(x, 2 * math.pi)


@pytest.mark.parametrize("name,label", CASES)
def test_frame_unitary(name, label):
    r = frame_residuals(triv(name, label))
    assert r["orthonormal"] <= 1e-9
    assert r["J_constant"] <= 1e-9


def test_hopf_holonomy_trivial():
    tv = triv("round", "short")
    assert abs(tv.holonomy_angle) <= 1e-9
    np.testing.assert_allclose(tv.monodromy_correction, np.broadcast_to(np.eye(2), (tv.N, 2, 2)),
                               atol=1e-9)


@pytest.mark.parametrize("label,expected", [("short", wrap(2 * math.pi / SQRT2)),
                                            ("long", wrap(2 * math.pi * SQRT2))])
def test_ellipsoid_holonomy_angle(label, expected):
    assert triv("ellipsoid", label).holonomy_angle == pytest.approx(expected, abs=1e-8)


@pytest.mark.parametrize("name,label", CASES)
def test_correction_is_constant_rotation(name, label):
    tv = triv(name, label)
    t = np.arange(tv.N) / tv.N
    np.testing.assert_allclose(tv.monodromy_correction, rot(-tv.closure_angle * t), atol=1e-14)


def test_frame_closes_up():
    tv = triv("ellipsoid", "short")
    o = tv.orbit
    # continue the frame by one step and compare with the start
    from rsl._util import trig_resample

    fine = trig_resample(tv.frame, 4 * tv.N)
    assert np.max(np.abs(fine[0] - tv.frame[0])) <= 1e-12
    assert np.max(np.abs(np.diff(fine, axis=0))) <= 1.0 / o.N * 10


@pytest.mark.parametrize("name,label", CASES)
def test_gamma_antisymmetric(name, label):
    o, tv = orbit(name, label), triv(name, label)
    for which in ("triad", "levi_civita"):
        g = connection_coefficients(o, tv, which).Gamma
        assert np.max(np.abs(g + np.swapaxes(g, -1, -2))) <= 1e-8
    # the flow does not preserve the metric: its symmetric part is -(T/2)(L_R J) J
    g = connection_coefficients(o, tv, "flow").Gamma
    sym = 0.5 * (g + np.swapaxes(g, -1, -2))
    assert np.max(np.abs(sym + 0.5 * o.action * tv.lie_J_J)) <= 1e-6


@pytest.mark.parametrize("name,label", CASES)
def test_lie_and_transport_routes_agree(name, label):
    o, tv = orbit(name, label), triv(name, label)
    a = connection_coefficients(o, tv, "triad", method="lie").Gamma
    b = connection_coefficients(o, tv, "triad", method="transport").Gamma
    assert np.max(np.abs(a - b)) <= 1e-6


@pytest.mark.parametrize("name,label", CASES)
def test_flow_connection_from_triad(name, label):
    # the flow connection rearranged from the triad connection
    o, tv = orbit(name, label), triv(name, label)
    rearranged = tv.closure_generator - 0.5 * o.action * tv.lie_J_J
    assert np.max(np.abs(flow_connection(o, tv) - rearranged)) <= 1e-6


def test_frame_change_conjugates_gamma():
    o = orbit("twisted", "short", 256)
    tv1 = build_trivialization(o)
    e1 = tv1.frame[0, :, 0]
    e2 = tv1.frame[0, :, 1]
    alpha = 0.7
    tv2 = build_trivialization(o, start=math.cos(alpha) * e1 + math.sin(alpha) * e2)
    P = rot(alpha)
    np.testing.assert_allclose(tv2.frame, tv1.frame @ P, atol=1e-8)
    g1 = connection_coefficients(o, tv1, "triad", "lie").Gamma
    g2 = connection_coefficients(o, tv2, "triad", "lie").Gamma
    assert np.max(np.abs(g2 - P.T @ g1 @ P)) <= 1e-8


@pytest.mark.parametrize("name,label", CASES)
def test_levi_civita_shift(name, label):
    o, tv = orbit(name, label), triv(name, label)
    lc = connection_coefficients(o, tv, "levi_civita").Gamma
    tr_ = connection_coefficients(o, tv, "triad").Gamma
    assert np.max(np.abs(lc - tr_ - 0.5 * o.action * J0)) <= 1e-12


@pytest.mark.parametrize("name", ["round", "ellipsoid", "twisted"])
def test_koszul_gap_independent(name):
    for o in principal_orbits(triad(name), 2, N=64):
        gap = koszul_connection_gap(o)
        assert np.max(np.abs(gap - 0.5 * o.action * J0)) <= 1e-8


def test_unknown_connection():
    o, tv = orbit("round"), triv("round")
    with pytest.raises(ValueError):
        connection_coefficients(o, tv, "bogus")
    with pytest.raises(ValueError):
        connection_coefficients(o, tv, "triad", method="bogus")
