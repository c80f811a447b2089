"""Dense complex-matrix layer: exponentials, Dyson factors, oscillator operators.

All matrices are plain ``numpy.ndarray`` of dtype ``complex128``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg

from .errors import EigensolverFailure, Overflow, SingularFactor
from .expr import CoefficientFn

HERMITIAN_TOL = 1e-10
# 1/cond above this is treated as singular when inverting a sampled factor
_RCOND_MIN = 1e-13


def as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def dagger(A: np.ndarray) -> np.ndarray:
    return A.conj().T


def matrix_exp(A) -> np.ndarray:
    """``e^A`` by Pade scaling and squaring (``scipy.linalg.expm``)."""
    A = as_matrix(A)
    if not np.all(np.isfinite(A)):
        raise Overflow("matrix exponential of a non-finite matrix")
    with np.errstate(over="ignore", invalid="ignore"):
        E = scipy.linalg.expm(A)
    if not np.all(np.isfinite(E)):
        raise Overflow(f"matrix exponential overflowed (norm {np.linalg.norm(A):.3g})")
    return E


class FactorSample(NamedTuple):
    omega: np.ndarray
    omega_dot: np.ndarray
    sigma_tilde: np.ndarray
    omega_inv: np.ndarray


@dataclass(frozen=True)
class SeparableFactor:
    """``Omega(t) = exp(f(t) K)`` with constant generator ``K``.

    Because ``f(t)K`` and ``f(s)K`` commute, ``dOmega/dt = f'(t) K Omega``
    and ``i Omega^-1 dOmega/dt = i f'(t) K`` hold exactly.
    """

    label: str
    generator: np.ndarray
    coefficient: CoefficientFn

    def __post_init__(self):
        object.__setattr__(self, "generator", as_matrix(self.generator))
        if not isinstance(self.coefficient, CoefficientFn):
            object.__setattr__(self, "coefficient", CoefficientFn(self.coefficient))

    @property
    def dim(self) -> int:
        return self.generator.shape[0]

    def omega(self, t: float) -> np.ndarray:
        return matrix_exp(self.coefficient(t) * self.generator)

    def omega_inv(self, t: float) -> np.ndarray:
        return matrix_exp(-self.coefficient(t) * self.generator)

    def is_stationary(self) -> bool:
        return self.coefficient.is_constant()

    def sample(self, t: float) -> FactorSample:
        return factor_eval(self, t)


def factor_eval(factor: SeparableFactor, t: float) -> FactorSample:
    """``(Omega, dOmega/dt, SigmaTilde, Omega^-1)`` at time ``t``.

    Only the first three are part of the mathematical contract; the inverse
    is returned because every caller needs it and ``exp(-fK)`` is exact.
    """
    if isinstance(factor, GeneralFactor):
        return factor.sample(t)
    f = factor.coefficient(t)
    rate = factor.coefficient.derivative(t)
    if not (np.isfinite(f) and np.isfinite(rate)):
        raise SingularFactor(f"coefficient of {factor.label!r} is not finite at t={t}")
    K = factor.generator
    omega = matrix_exp(f * K)
    omega_inv = matrix_exp(-f * K)
    rcond = 1.0 / (np.linalg.norm(omega, 2) * np.linalg.norm(omega_inv, 2))
    if rcond < _RCOND_MIN:
        raise SingularFactor(f"{factor.label!r} is numerically singular at t={t} (1/cond={rcond:.2e})")
    return FactorSample(omega, rate * (K @ omega), 1j * rate * K, omega_inv)


def finite_diff_derivative(op: Callable[[float], np.ndarray], t: float, h: float = 1e-5) -> np.ndarray:
    """Central difference ``(op(t+h) - op(t-h)) / 2h``; truncation error O(h^2)."""
    if h <= 0:
        raise ValueError("h must be positive")
    sampler = op.omega if hasattr(op, "omega") else op
    return (np.asarray(sampler(t + h)) - np.asarray(sampler(t - h))) / (2.0 * h)


def safe_inverse(A: np.ndarray, label: str = "factor") -> np.ndarray:
    try:
        rcond = 1.0 / np.linalg.cond(A)
    except np.linalg.LinAlgError as exc:
        raise SingularFactor(f"{label}: {exc}") from exc
    if not np.isfinite(rcond) or rcond < _RCOND_MIN:
        raise SingularFactor(f"{label} is numerically singular (1/cond={rcond:.2e})")
    return np.linalg.inv(A)


@dataclass(frozen=True)
class GeneralFactor:
    """Arbitrary sampled Dyson factor; derivatives by central differences.

    Lower accuracy than :class:`SeparableFactor`: ``dOmega/dt`` carries an
    O(h^2) truncation error.
    """

    label: str
    sampler: Callable[[float], np.ndarray]
    h: float = 1e-5
    stationary: bool = False

    def omega(self, t: float) -> np.ndarray:
        return as_matrix(self.sampler(t))

    def omega_inv(self, t: float) -> np.ndarray:
        return safe_inverse(self.omega(t), self.label)

    @property
    def dim(self) -> int:
        return self.omega(0.0).shape[0]

    def is_stationary(self) -> bool:
        return self.stationary

    def sample(self, t: float) -> FactorSample:
        omega = self.omega(t)
        inv = safe_inverse(omega, self.label)
        dot = finite_diff_derivative(self.omega, t, self.h)
        return FactorSample(omega, dot, 1j * inv @ dot, inv)


def build_osc_operators(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated ``x = (a + a^+)/sqrt2`` and ``p = i(a^+ - a)/sqrt2`` in the number basis."""
    if d < 2:
        raise ValueError("d must be >= 2")
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)
    ad = a.conj().T
    X = (a + ad) / np.sqrt(2.0)
    P = 1j * (ad - a) / np.sqrt(2.0)
    return X, P


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class Diagnostics(NamedTuple):
    hermiticity_residual: float
    min_eigenvalue: float | None
    is_positive_definite: bool | None


def hermiticity_residual(A: np.ndarray) -> float:
    return float(np.linalg.norm(A - dagger(A)))


def diagnostics(A) -> Diagnostics:
    """Frobenius Hermiticity residual and, for Hermitian input, a positivity verdict.

    ``min_eigenvalue`` and ``is_positive_definite`` are ``None`` when the
    residual exceeds ``HERMITIAN_TOL`` (positivity not applicable).
    """
    A = as_matrix(A)
    res = hermiticity_residual(A)
    if res > HERMITIAN_TOL * max(1.0, np.linalg.norm(A)):
        return Diagnostics(res, None, None)
    try:
        evals = np.linalg.eigvalsh((A + dagger(A)) / 2)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(str(exc)) from exc
    lo = float(evals[0])
    return Diagnostics(res, lo, lo > 0.0)
