import os
import subprocess
import sys

import numpy as np
import pytest

import gmikit
from gmikit import _backend, _fallback
from gmikit.rng import mix64, stream_key
from gmikit.supernyq import omega0_matrix, theta_matrix

try:
    from gmikit import _kernels
except ImportError:
    _kernels = None

needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")


def test_backend_reported():
    assert gmikit.BACKEND in ("cython", "python")
    assert gmikit.BACKEND == _backend.BACKEND


def test_fallback_stream_matches_scalar_definition():
    key = stream_key(5, ("x", 1))
    u = _fallback.uniform_stream(key, 10, 4)
    for i, ui in enumerate(u):
        z = mix64(key + (10 + i + 1) * 0x9E3779B97F4A7C15)
        assert ui == ((z >> 11) + 0.5) / 2 ** 53


@needs_ext
def test_streams_bit_identical():
    key = stream_key(123, ("noise", 7))
    np.testing.assert_array_equal(_kernels.uniform_stream(key, 0, 100_000),
                                  _fallback.uniform_stream(key, 0, 100_000))
    np.testing.assert_array_equal(_kernels.uniform_stream(key, 2 ** 40, 17),
                                  _fallback.uniform_stream(key, 2 ** 40, 17))


@needs_ext
@pytest.mark.parametrize("mat", [theta_matrix(3).array, omega0_matrix(8).array, np.diag([3.0, 1.0, 2.0])])
def test_jacobi_agrees(mat):
    a = np.ascontiguousarray(mat)
    lc, vc, _ = _kernels.jacobi_eigen(a, 100, 1e-15)
    lp, vp, _ = _fallback.jacobi_eigen(a, 100, 1e-15)
    np.testing.assert_allclose(np.sort(lc), np.sort(lp), atol=1e-13)
    np.testing.assert_allclose(np.sort(lc), np.linalg.eigvalsh(a), atol=1e-12)
    for lam, v in ((lc, vc), (lp, vp)):
        np.testing.assert_allclose(v @ np.diag(lam) @ v.T, a, atol=1e-12)


def test_pure_mode_gives_same_cli_output():
    argv = [sys.executable, "-m", "gmikit", "simulate", "--n", "64", "--trials", "20", "--seed", "2"]
    pure = subprocess.run(argv, capture_output=True, check=True, env={**os.environ, "GMIKIT_PURE": "1"}).stdout
    compiled = subprocess.run(argv, capture_output=True, check=True).stdout
    assert pure == compiled
    out = subprocess.run([sys.executable, "-c", "import gmikit; print(gmikit.BACKEND)"], capture_output=True,
                         text=True, check=True, env={**os.environ, "GMIKIT_PURE": "1"}).stdout
    assert out.strip() == "python"
