"""The ladder of hybrid pictures built from a factorized Dyson map.

Factor convention: ``factors[0]`` is ``Omega_1``, the factor applied first to
picture-0 kets; the full map is the product ``Omega_N ... Omega_1``. Picture
``j`` uses the partial product ``Omega_[j] = Omega_N ... Omega_{j+1}``, so
``j = N`` is the ordinary Hermitian picture (trivial metric) and ``j = 0`` the
fully non-Hermitian one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import SingularFactor, ZeroNorm
from .linop import FactorSample, GeneralFactor, SeparableFactor, dagger, diagnostics, factor_eval

Hamiltonian = Union[np.ndarray, Callable[[float], np.ndarray]]

ZERO_NORM_TOL = 1e-14


def hamiltonian_at(h: Hamiltonian, t: float) -> np.ndarray:
    return np.asarray(h(t) if callable(h) else h, dtype=complex)


@dataclass(frozen=True)
class FactorizedDysonMap:
    """Ordered factors ``[Omega_1, ..., Omega_N]`` (``Omega_1`` acts first)."""

    factors: tuple

    def __init__(self, factors: Sequence[Union[SeparableFactor, GeneralFactor]]):
        factors = tuple(factors)
        if not factors:
            raise ValueError("a Dyson map needs at least one factor")
        dims = {f.dim for f in factors}
        if len(dims) != 1:
            raise ValueError(f"factor dimensions disagree: {sorted(dims)}")
        object.__setattr__(self, "factors", factors)

    @property
    def N(self) -> int:
        return len(self.factors)

    @property
    def dim(self) -> int:
        return self.factors[0].dim

    def samples(self, t: float) -> list[FactorSample]:
        out = []
        for f in self.factors:
            try:
                out.append(factor_eval(f, t))
            except SingularFactor:
                raise
            except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
                raise SingularFactor(f"factor {f.label!r} failed at t={t}: {exc}") from exc
        return out

    def omega(self, t: float) -> np.ndarray:
        return partial_product(self, 0, t)

    def check_index(self, j: int):
        if not 0 <= j <= self.N:
            raise ValueError(f"picture index {j} outside [0, {self.N}]")


@dataclass
class PictureFamily:
    """All picture-dependent operators at one instant.

    Lists are indexed by picture ``j`` (``partials``, ``metrics``,
    ``hamiltonians``, ``generators``); ``sigma(n)`` returns the composite
    Coriolis operator ``Sigma_n`` for ``n = 1..N+1``.
    """

    t: float
    samples: list
    partials: list
    partial_inverses: list
    metrics: list
    sigmas: list  # sigmas[n-1] = Sigma_n, n = 1..N+1
    hamiltonians: list = field(default_factory=list)
    generators: list = field(default_factory=list)

    @property
    def N(self) -> int:
        return len(self.samples)

    def sigma(self, n: int) -> np.ndarray:
        return self.sigmas[n - 1]


def _chain(samples: list[FactorSample], d: int) -> list[np.ndarray]:
    N = len(samples)
    sigmas = [None] * (N + 1)
    sigmas[N] = np.zeros((d, d), dtype=complex)
    for n in range(N, 0, -1):
        s = samples[n - 1]
        sigmas[n - 1] = s.sigma_tilde + s.omega_inv @ sigmas[n] @ s.omega
    return sigmas


def picture_family(dyson: FactorizedDysonMap, h: Hamiltonian | None, t: float) -> PictureFamily:
    samples = dyson.samples(t)
    N, d = dyson.N, dyson.dim
    eye = np.eye(d, dtype=complex)
    partials = [None] * (N + 1)
    inverses = [None] * (N + 1)
    partials[N] = eye
    inverses[N] = eye
    for j in range(N - 1, -1, -1):
        s = samples[j]  # Omega_{j+1}
        partials[j] = partials[j + 1] @ s.omega
        inverses[j] = s.omega_inv @ inverses[j + 1]
    metrics = [dagger(W) @ W for W in partials]
    fam = PictureFamily(t, samples, partials, inverses, metrics, _chain(samples, d))
    if h is not None:
        hs = [None] * (N + 1)
        hs[N] = hamiltonian_at(h, t)
        for j in range(N, 0, -1):
            s = samples[j - 1]
            hs[j - 1] = s.omega_inv @ hs[j] @ s.omega
        fam.hamiltonians = hs
        fam.generators = [hs[j] - fam.sigma(j + 1) for j in range(N + 1)]
    return fam


def partial_product(dyson: FactorizedDysonMap, j: int, t: float) -> np.ndarray:
    """``Omega_[j](t) = Omega_N ... Omega_{j+1}``; identity for ``j = N``."""
    dyson.check_index(j)
    out = np.eye(dyson.dim, dtype=complex)
    for f in dyson.factors[j:]:
        out = f.omega(t) @ out
    return out


def metric_at(dyson: FactorizedDysonMap, j: int, t: float) -> np.ndarray:
    """``Theta^[j] = Omega_[j]^+ Omega_[j]``."""
    W = partial_product(dyson, j, t)
    return dagger(W) @ W


def descend_hamiltonians(dyson: FactorizedDysonMap, h: Hamiltonian, t: float) -> list[np.ndarray]:
    """``[H_N, ..., H_0]`` with ``H_N = h(t)`` and ``H_{j-1} = Omega_j^-1 H_j Omega_j``."""
    return picture_family(dyson, h, t).hamiltonians[::-1]


def composite_coriolis_chain(dyson: FactorizedDysonMap, t: float) -> list[np.ndarray]:
    """``[Sigma_{N+1}, ..., Sigma_1]`` where ``Sigma_{N+1} = 0`` and
    ``Sigma_n = SigmaTilde_n + Omega_n^-1 Sigma_{n+1} Omega_n``."""
    return _chain(dyson.samples(t), dyson.dim)[::-1]


def generator_at(dyson: FactorizedDysonMap, h: Hamiltonian, j: int, t: float) -> np.ndarray:
    """``G_j = H_j - Sigma_{j+1}``, the Schroedinger generator of picture ``j``."""
    dyson.check_index(j)
    return picture_family(dyson, h, t).generators[j]


def quasi_hermiticity_residual(dyson: FactorizedDysonMap, h: Hamiltonian, j: int, t: float) -> float:
    dyson.check_index(j)
    fam = picture_family(dyson, h, t)
    H, theta = fam.hamiltonians[j], fam.metrics[j]
    return float(np.linalg.norm(dagger(H) @ theta - theta @ H))


def observable_in_picture(dyson: FactorizedDysonMap, a: np.ndarray, j: int, t: float) -> np.ndarray:
    """Picture-``j`` representative ``Omega_[j]^-1 a Omega_[j]`` of a Hermitian-picture operator."""
    fam = picture_family(dyson, None, t)
    return fam.partial_inverses[j] @ a @ fam.partials[j]


def map_operator(dyson: FactorizedDysonMap, A: np.ndarray, source: int, target: int, t: float) -> np.ndarray:
    """Move a picture-``source`` operator to picture ``target``."""
    dyson.check_index(source)
    dyson.check_index(target)
    fam = picture_family(dyson, None, t)
    # A_target = Omega_[target]^-1 Omega_[source] A Omega_[source]^-1 Omega_[target]
    left = fam.partial_inverses[target] @ fam.partials[source]
    right = fam.partial_inverses[source] @ fam.partials[target]
    return left @ A @ right


@dataclass(frozen=True)
class StatePair:
    """Ket ``|psi>`` and conjugate ket ``|psi>>`` of one picture."""

    picture: int
    ket: np.ndarray
    conj: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "ket", np.asarray(self.ket, dtype=complex))
        object.__setattr__(self, "conj", np.asarray(self.conj, dtype=complex))

    @classmethod
    def pure(cls, dyson: FactorizedDysonMap, j: int, t: float, ket) -> "StatePair":
        """Pure state whose conjugate ket is ``Theta^[j](t) ket``."""
        dyson.check_index(j)
        ket = np.asarray(ket, dtype=complex)
        return cls(j, ket, metric_at(dyson, j, t) @ ket)

    @property
    def norm(self) -> complex:
        """Physical overlap ``<<psi|psi>``."""
        return complex(np.vdot(self.conj, self.ket))


def map_state(state: StatePair, direction: str, dyson: FactorizedDysonMap, t: float) -> StatePair:
    """Move a state one rung: ``"up"`` is ``j -> j+1``, ``"down"`` is ``j -> j-1``."""
    j = state.picture
    if direction == "up":
        dyson.check_index(j + 1)
        s = factor_eval(dyson.factors[j], t)  # Omega_{j+1}
        return StatePair(j + 1, s.omega @ state.ket, dagger(s.omega_inv) @ state.conj)
    if direction == "down":
        dyson.check_index(j - 1)
        s = factor_eval(dyson.factors[j - 1], t)  # Omega_j
        return StatePair(j - 1, s.omega_inv @ state.ket, dagger(s.omega) @ state.conj)
    raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")


def move_state(state: StatePair, target: int, dyson: FactorizedDysonMap, t: float) -> StatePair:
    while state.picture < target:
        state = map_state(state, "up", dyson, t)
    while state.picture > target:
        state = map_state(state, "down", dyson, t)
    return state


def physical_expectation(state: StatePair, A: np.ndarray) -> complex:
    """``<<psi|A|psi> / <<psi|psi>``."""
    norm = state.norm
    if abs(norm) < ZERO_NORM_TOL:
        raise ZeroNorm(f"<<psi|psi> = {norm:.3e}")
    return complex(np.vdot(state.conj, A @ state.ket)) / norm


def metric_positivity(dyson: FactorizedDysonMap, t: float) -> list[bool]:
    return [bool(diagnostics(theta).is_positive_definite) for theta in picture_family(dyson, None, t).metrics]
