import numpy as np
import pytest

from corforge.errors import ZeroNorm
from corforge.linop import PAULI_X, PAULI_Y, PAULI_Z, SeparableFactor, finite_diff_derivative
from corforge.pictures import (
    FactorizedDysonMap,
    StatePair,
    map_operator,
    map_state,
    move_state,
    observable_in_picture,
    physical_expectation,
    picture_family,
)


@pytest.fixture
def dyson():
    return FactorizedDysonMap(
        [
            SeparableFactor("a", PAULI_X, "0.3*t"),
            SeparableFactor("b", PAULI_Z + 0.5j * PAULI_Y, "0.2*sin(t)"),
            SeparableFactor("c", PAULI_Y, "0.1*t^2"),
        ]
    )


def test_ordering_first_factor_acts_first(dyson):
    s = dyson.samples(0.7)
    assert np.allclose(dyson.omega(0.7), s[2].omega @ s[1].omega @ s[0].omega)


def test_family_partials_and_metrics(dyson):
    fam = picture_family(dyson, PAULI_Z, 0.7)
    assert np.allclose(fam.partials[0], dyson.omega(0.7))
    assert np.allclose(fam.partials[3], np.eye(2))
    for j in range(4):
        assert np.allclose(fam.metrics[j], fam.partials[j].conj().T @ fam.partials[j])
        assert np.allclose(fam.partial_inverses[j] @ fam.partials[j], np.eye(2))


def test_sigma_chain_by_finite_differences(dyson):
    t = 0.6
    fam = picture_family(dyson, None, t)
    for j in range(4):
        # Sigma_{j+1} = i Omega_[j]^-1 d/dt Omega_[j]
        partial = lambda s, j=j: picture_family(dyson, None, s).partials[j]
        fd = 1j * fam.partial_inverses[j] @ finite_diff_derivative(partial, t)
        assert np.allclose(fam.sigma(j + 1), fd, atol=1e-8)
    assert np.allclose(fam.sigma(4), 0)


def test_hamiltonian_descent(dyson):
    fam = picture_family(dyson, PAULI_Z, 0.6)
    for j in range(4):
        expected = fam.partial_inverses[j] @ PAULI_Z @ fam.partials[j]
        assert np.allclose(fam.hamiltonians[j], expected)
        assert np.allclose(fam.generators[j], fam.hamiltonians[j] - fam.sigma(j + 1))


def test_state_maps_round_trip(dyson):
    psi = np.array([0.6, 0.8j])
    s = StatePair.pure(dyson, 3, 0.4, psi)
    down = move_state(s, 0, dyson, 0.4)
    assert down.picture == 0
    back = move_state(down, 3, dyson, 0.4)
    assert np.allclose(back.ket, psi) and np.allclose(back.conj, psi)
    assert down.norm == pytest.approx(1.0)
    up = map_state(down, "up", dyson, 0.4)
    assert up.picture == 1


def test_expectation_is_picture_independent(dyson):
    psi = np.array([0.6, 0.8j])
    t = 0.9
    ref = np.vdot(psi, PAULI_X @ psi)
    for j in range(4):
        s = move_state(StatePair.pure(dyson, 3, t, psi), j, dyson, t)
        A = observable_in_picture(dyson, PAULI_X, j, t)
        assert physical_expectation(s, A) == pytest.approx(ref)
    A1 = observable_in_picture(dyson, PAULI_X, 1, t)
    assert np.allclose(map_operator(dyson, A1, 1, 2, t), observable_in_picture(dyson, PAULI_X, 2, t))


def test_zero_norm(dyson):
    s = StatePair(0, np.zeros(2, complex), np.zeros(2, complex))
    with pytest.raises(ZeroNorm):
        physical_expectation(s, PAULI_X)
