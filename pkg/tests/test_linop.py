import numpy as np
import pytest
import scipy.linalg

from corforge.errors import Overflow, SingularFactor
from corforge.linop import (
    PAULI_X,
    GeneralFactor,
    SeparableFactor,
    build_osc_operators,
    diagnostics,
    factor_eval,
    finite_diff_derivative,
    matrix_exp,
    safe_inverse,
)


def test_separable_factor_sample():
    K = np.array([[0.1, 0.4], [-0.2, 0.3j]])
    f = SeparableFactor("f", K, "0.5*t^2")
    s = factor_eval(f, 0.8)
    omega = scipy.linalg.expm(0.5 * 0.64 * K)
    assert np.allclose(s.omega, omega)
    assert np.allclose(s.omega_inv @ s.omega, np.eye(2))
    assert np.allclose(s.omega_dot, finite_diff_derivative(lambda t: scipy.linalg.expm(0.5 * t * t * K), 0.8), atol=1e-8)
    assert np.allclose(s.sigma_tilde, 1j * 0.8 * K)


def test_general_factor_matches_separable():
    K = PAULI_X * 0.7
    sep = SeparableFactor("s", K, "sin(t)")
    gen = GeneralFactor("g", lambda t: scipy.linalg.expm(np.sin(t) * K))
    a, b = factor_eval(sep, 0.4), factor_eval(gen, 0.4)
    assert np.allclose(a.omega, b.omega)
    assert np.allclose(a.sigma_tilde, b.sigma_tilde, atol=1e-8)


def test_oscillator_operators():
    X, P = build_osc_operators(8)
    assert np.allclose(X, X.conj().T)
    assert np.allclose(P, P.conj().T)
    N = (X @ X + P @ P - np.eye(8)) / 2
    assert np.allclose(np.diag(N)[:-1], np.arange(7))


def test_errors():
    with pytest.raises(SingularFactor):
        safe_inverse(np.zeros((2, 2)))
    with pytest.raises(Overflow):
        matrix_exp(np.eye(2) * 1e5)


def test_diagnostics():
    d = diagnostics(np.diag([1.0, 2.0]))
    assert d.is_positive_definite and d.min_eigenvalue == pytest.approx(1.0)
    assert not diagnostics(np.diag([1.0, -2.0])).is_positive_definite
    nh = diagnostics(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert nh.is_positive_definite is None and nh.hermiticity_residual > 1
