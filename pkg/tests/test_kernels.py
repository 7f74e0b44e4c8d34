import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from rsl import kernels
from rsl.kernels import _pykernels

try:
    from rsl.kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None

IMPLS = [_pykernels] + ([_ckernels] if _ckernels is not None else [])
J0 = np.array([[0.0, -1.0], [1.0, 0.0]])


@pytest.mark.parametrize("impl", IMPLS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
@given(seed=st.integers(0, 10_000), n=st.integers(1, 24))
def test_jacobi_matches_lapack(impl, seed, n):
    a = np.random.default_rng(seed).normal(size=(n, n))
    a = a + a.T
    w, v, _ = impl.jacobi_eigh(a)
    np.testing.assert_allclose(np.sort(w), np.linalg.eigvalsh(a), atol=1e-10 * max(1, np.abs(a).max()))
    np.testing.assert_allclose(v.T @ v, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(a @ v, v * w, atol=1e-9 * max(1, np.abs(a).max()))


@pytest.mark.parametrize("impl", IMPLS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_monodromy_constant_coefficients(impl):
    S = np.array([[0.3, -0.2], [-0.2, 1.1]])
    mus = np.array([-2.0, 0.0, 1.5])
    s_fine = np.ascontiguousarray(np.broadcast_to(S, (256, 2, 2)))
    psi = impl.monodromy_batch(s_fine, mus)
    for m, p in zip(mus, psi):
        np.testing.assert_allclose(p, expm(J0 @ (S + m * np.eye(2))), atol=1e-9)


@pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")
def test_backends_agree():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(40, 40))
    a = a + a.T
    wc = np.sort(_ckernels.jacobi_eigh(a)[0])
    wp = np.sort(_pykernels.jacobi_eigh(a)[0])
    np.testing.assert_allclose(wc, wp, atol=1e-10)
    t = np.arange(128) / 128
    s_fine = np.zeros((128, 2, 2))
    s_fine[:, 0, 0] = np.cos(2 * np.pi * t)
    s_fine[:, 1, 1] = np.sin(4 * np.pi * t)
    mus = np.linspace(-5, 5, 7)
    np.testing.assert_allclose(_ckernels.monodromy_batch(s_fine, mus),
                               _pykernels.monodromy_batch(s_fine, mus), atol=1e-13)


def test_pure_python_switch():
    env = dict(os.environ, RSL_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import rsl.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_backend_flag_consistent():
    assert kernels.BACKEND == ("cython" if kernels.COMPILED else "python")
