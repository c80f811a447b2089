import importlib

import numpy as np
import pytest

from corforge import _core
from corforge._core import rk4_flow_py


def random_problem(rng, d=6, m=3, n=40, with_right=True):
    L = rng.normal(size=(2 * n + 1, d, d)) + 1j * rng.normal(size=(2 * n + 1, d, d))
    R = rng.normal(size=(2 * n + 1, m, m)) + 1j * rng.normal(size=(2 * n + 1, m, m)) if with_right else None
    y0 = rng.normal(size=(d, m)) + 1j * rng.normal(size=(d, m))
    return 0.2 * L, None if R is None else 0.2 * R, y0


def test_backend_flag():
    assert _core.BACKEND in ("cython", "python")


@pytest.mark.skipif(_core.BACKEND != "cython", reason="compiled kernel not built")
@pytest.mark.parametrize("with_right", [True, False])
def test_compiled_matches_fallback(with_right):
    from corforge._core import _rk4

    rng = np.random.default_rng(7)
    L, R, y0 = random_problem(rng, with_right=with_right)
    a = _rk4.rk4_flow(L, R, y0, 0.01)
    b = rk4_flow_py.rk4_flow(L, R, y0, 0.01)
    assert a.shape == b.shape == (41, 6, 3)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-13)


def test_fallback_constant_generator_is_exponential():
    import scipy.linalg

    rng = np.random.default_rng(3)
    A = 0.3 * (rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    n, h = 100, 0.01
    L = np.broadcast_to(A, (2 * n + 1, 4, 4)).copy()
    y0 = np.eye(4, dtype=complex)
    out = rk4_flow_py.rk4_flow(L, None, y0, h)
    assert np.allclose(out[-1], scipy.linalg.expm(-1j * A * n * h), atol=1e-9)


def test_env_forces_fallback(monkeypatch):
    monkeypatch.setenv("CORFORGE_PURE_PYTHON", "1")
    mod = importlib.reload(_core)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("CORFORGE_PURE_PYTHON")
        importlib.reload(_core)
