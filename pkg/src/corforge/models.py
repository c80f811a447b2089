"""Built-in scenarios: two-level toy, four-factor anharmonic map, Jones-Mateo partner."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, EigensolverFailure
from .evolution import TimeGrid
from .expr import CoefficientFn
from .linop import PAULI_X, PAULI_Z, SeparableFactor, build_osc_operators, dagger, hermiticity_residual
from .pictures import FactorizedDysonMap, picture_family
from .weyl import I, P, X, ScalarExpr, SymbolicFactor, WeylPolynomial, composite_coriolis_symbolic, normal_order


@dataclass
class ModelScenario:
    """A ready-to-run problem.

    ``hamiltonian(t)`` always returns the Hermitian-picture ``h(t)``. In
    bottom-up mode it is derived from the picture-0 generator as
    ``Omega (G + Sigma_1) Omega^-1`` and its Hermiticity residual is reported
    through :meth:`hermiticity_residual`, never assumed.
    """

    name: str
    dyson: FactorizedDysonMap
    hamiltonian: Callable[[float], np.ndarray]
    mode: str
    initial_state: np.ndarray
    initial_picture: int
    grid: TimeGrid
    picture: int = 0
    observables: dict = field(default_factory=dict)  # name -> Hermitian-picture matrix
    generator: Callable[[float], np.ndarray] | None = None
    symbolic_factors: list | None = None
    ensemble: dict | None = None  # {"states": [...], "weights": [...]} in initial_picture

    @property
    def dim(self) -> int:
        return self.dyson.dim

    @property
    def N(self) -> int:
        return self.dyson.N

    def hermiticity_residual(self, t: float) -> float:
        return hermiticity_residual(self.hamiltonian(t))


def bottom_up_hamiltonian(dyson: FactorizedDysonMap, generator: Callable[[float], np.ndarray]):
    """``h(t) = Omega (G(t) + Sigma_1(t)) Omega^-1`` for a picture-0 generator ``G``."""

    def h(t):
        fam = picture_family(dyson, None, t)
        H0 = np.asarray(generator(t), dtype=complex) + fam.sigma(1)
        return fam.partials[0] @ H0 @ fam.partial_inverses[0]

    return h


def build_two_level_toy(a: float = 0.3, b: float = 0.2, grid: TimeGrid | None = None) -> ModelScenario:
    """``Omega_1 = exp(a t X)``, ``Omega_2 = exp(b t Z)``, ``h = Z`` (top-down)."""
    dyson = FactorizedDysonMap(
        [
            SeparableFactor("omega1", PAULI_X, CoefficientFn(f"{float(a)!r}*t")),
            SeparableFactor("omega2", PAULI_Z, CoefficientFn(f"{float(b)!r}*t")),
        ]
    )
    h = PAULI_Z.copy()
    return ModelScenario(
        name="two-level",
        dyson=dyson,
        hamiltonian=lambda t: h,
        mode="top_down",
        initial_state=np.array([1.0, 1.0j]) / np.sqrt(2.0),
        initial_picture=2,
        grid=grid or TimeGrid(0.0, 1.0, 1e-3),
        picture=0,
        observables={"sigma_x": PAULI_X.copy(), "sigma_z": PAULI_Z.copy()},
    )


@dataclass(frozen=True)
class SigmaParametrization:
    """Coupling ``g = 1/(4 s^3)`` and mass ``m = (4 c2 + s'^2 - 2 s s'') / (4 s^2)``
    in terms of a reparametrized time ``s = sigma(t) > 0``."""

    sigma: CoefficientFn
    c2: float = 0.0

    def __post_init__(self):
        if not isinstance(self.sigma, CoefficientFn):
            object.__setattr__(self, "sigma", CoefficientFn(self.sigma))

    def _value(self, t):
        s = self.sigma(t)
        if np.any(np.asarray(s) <= 0):
            raise DomainError(f"sigma(t) must be positive, got {s} at t={t}")
        return s

    def coupling(self, t):
        return 1.0 / (4.0 * self._value(t) ** 3)

    def mass(self, t):
        s = self._value(t)
        ds = self.sigma.derivative(t)
        dds = self.sigma.derivative.derivative(t)
        return (4.0 * self.c2 + ds**2 - 2.0 * s * dds) / (4.0 * s**2)

    def check(self, times):
        self._value(np.asarray(times, dtype=float))


FRING_TENNEY_DEFAULTS = {
    "alpha": "0.05*sin(t)",
    "beta": "0.002*t",
    "gamma": "0.02*t^2",
    "delta": "0.1*cos(t)",
}


def fring_tenney_symbolic_factors() -> list[SymbolicFactor]:
    """``[exp(i delta p), exp(i gamma p^2), exp(beta p^3), exp(alpha x)]``, first-acting first."""
    p2 = normal_order(P, P)
    return [
        SymbolicFactor("delta", P.scale(I)),
        SymbolicFactor("gamma", p2.scale(I)),
        SymbolicFactor("beta", normal_order(p2, P)),
        SymbolicFactor("alpha", X),
    ]


def fring_tenney_closed_form():
    """The five-term Coriolis operator of the four-factor map, written out term by term:
    ``i a' x + i b' p^3 - (3 a' b + c') p^2 - (2 i c a' + d') p - i d a'``
    with ``(a, b, c, d) = (alpha, beta, gamma, delta)``."""
    da = ScalarExpr.symbol("alpha", dot=True)
    b, db = ScalarExpr.symbol("beta"), ScalarExpr.symbol("beta", dot=True)
    c, dc = ScalarExpr.symbol("gamma"), ScalarExpr.symbol("gamma", dot=True)
    d, dd = ScalarExpr.symbol("delta"), ScalarExpr.symbol("delta", dot=True)
    return WeylPolynomial(
        {
            (1, 0): I * da,
            (0, 3): I * db,
            (0, 2): -(3 * da * b + dc),
            (0, 1): -(2 * I * c * da + dd),
            (0, 0): -(I * d * da),
        }
    )


def build_fring_tenney_scenario(
    d: int = 16,
    alpha="0.05*sin(t)",
    beta="0.002*t",
    gamma="0.02*t^2",
    delta="0.1*cos(t)",
    param: SigmaParametrization | None = None,
    grid: TimeGrid | None = None,
) -> ModelScenario:
    """Four separable factors on a truncated oscillator basis with the
    wrong-sign generator ``G = p^2 + (m/4) x^2 - (g/16) x^4`` (bottom-up)."""
    if d < 8:
        raise ValueError("d must be >= 8")
    param = param or SigmaParametrization(CoefficientFn("1+t^2"), 0.0)
    grid = grid or TimeGrid(0.0, 1.0, 1e-3)
    param.check(np.linspace(grid.t_start, grid.t_end, 21))
    Xm, Pm = build_osc_operators(d)
    P2 = Pm @ Pm
    X2 = Xm @ Xm
    X4 = X2 @ X2
    dyson = FactorizedDysonMap(
        [
            SeparableFactor("delta", 1j * Pm, CoefficientFn(delta)),
            SeparableFactor("gamma", 1j * P2, CoefficientFn(gamma)),
            SeparableFactor("beta", P2 @ Pm, CoefficientFn(beta)),
            SeparableFactor("alpha", Xm, CoefficientFn(alpha)),
        ]
    )

    def generator(t):
        return P2 + (param.mass(t) / 4.0) * X2 - (param.coupling(t) / 16.0) * X4

    psi0 = np.zeros(d, dtype=complex)
    psi0[0] = 1.0
    return ModelScenario(
        name="fring-tenney",
        dyson=dyson,
        hamiltonian=bottom_up_hamiltonian(dyson, generator),
        mode="bottom_up",
        initial_state=psi0,
        initial_picture=0,
        grid=grid,
        picture=0,
        observables={"x": Xm.copy()},
        generator=generator,
        symbolic_factors=fring_tenney_symbolic_factors(),
    )


def fring_tenney_values(scenario_or_coeffs, t: float) -> dict:
    """Numeric ``{name: f(t), "ad(name)": f'(t)}`` for the four coefficients."""
    factors = scenario_or_coeffs.dyson.factors
    out = {}
    for f in factors:
        out[f.label] = f.coefficient(t)
        out[f"ad({f.label})"] = f.coefficient.derivative(t)
    return out


def interior_block(A: np.ndarray) -> np.ndarray:
    """Leading ``d/2 x d/2`` block, away from the truncation edge of the number basis."""
    k = A.shape[0] // 2
    return A[:k, :k]


def symbolic_coriolis_residual(scenario: ModelScenario, t: float) -> float:
    """Interior-block distance between the matrix ``Sigma_1`` and the exact operator."""
    Xm, Pm = build_osc_operators(scenario.dim)
    exact = composite_coriolis_symbolic(scenario.symbolic_factors)[-1]
    S_exact = exact.to_matrix(Xm, Pm, fring_tenney_values(scenario, t))
    S_matrix = picture_family(scenario.dyson, None, t).sigma(1)
    return float(np.linalg.norm(interior_block(S_matrix - S_exact)))


def build_jones_mateo(g: float = 1.0, d: int = 64) -> np.ndarray:
    """``p^4/(64 g) - p/2 + 16 g x^2`` on the ``d``-level oscillator basis."""
    if g <= 0:
        raise ValueError("g must be positive")
    if d < 16:
        raise ValueError("d must be >= 16")
    Xm, Pm = build_osc_operators(d)
    P2 = Pm @ Pm
    H = P2 @ P2 / (64.0 * g) - Pm / 2.0 + 16.0 * g * (Xm @ Xm)
    return (H + dagger(H)) / 2.0


def spectrum_lowest(A: np.ndarray, k: int) -> np.ndarray:
    """The ``k`` eigenvalues of smallest real part, ascending by real part."""
    A = np.asarray(A, dtype=complex)
    if not 1 <= k <= A.shape[0]:
        raise ValueError(f"k must lie in [1, {A.shape[0]}]")
    try:
        if hermiticity_residual(A) <= 1e-12 * max(1.0, np.linalg.norm(A)):
            ev = np.linalg.eigvalsh(A).astype(complex)
        else:
            ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(str(exc)) from exc
    order = np.lexsort((ev.imag, ev.real))
    return ev[order][:k]


BUILTINS = {
    "two-level": build_two_level_toy,
    "fring-tenney": build_fring_tenney_scenario,
}
