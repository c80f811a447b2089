"""Time integration of the picture-``j`` evolution equations.

Every equation here is a linear flow ``i dY/dt = L(t) Y - Y R(t)``:

=============  ==============  ==============  ======================
equation       ``Y``           ``L``           ``R``
=============  ==============  ==============  ======================
kets           ``|psi>``       ``G_j``         --
conj. kets     ``|psi>>``      ``G_j^+``       --
observables    ``A_j``         ``-Sigma``      ``-Sigma`` (j+1)
densities      ``rho_j``       ``G_j``         ``G_j``
metric         ``Theta``       ``-Sigma_1^+``  ``-Sigma_1``
=============  ==============  ==============  ======================

Fixed-step RK4 samples ``L`` and ``R`` at ``t, t+h/2, t+h`` up front and hands
the whole array to the compiled kernel in :mod:`corforge._core`; the adaptive
Dormand-Prince path evaluates them on demand.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import _core
from .errors import StepRejection, ZeroNorm
from .linop import dagger
from .pictures import (
    ZERO_NORM_TOL,
    FactorizedDysonMap,
    Hamiltonian,
    StatePair,
    picture_family,
)

log = logging.getLogger(__name__)

METHODS = ("rk4", "rk45")
GAP_FLAG = 1e-6


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    step: float
    method: str = "rk4"
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.method == "rk4":
            ratio = (self.t_end - self.t_start) / self.step
            if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio) or round(ratio) < 1:
                raise ValueError("(t_end - t_start) / step must be a positive integer for rk4")

    @property
    def n_steps(self) -> int:
        return max(1, int(round((self.t_end - self.t_start) / self.step)))

    def sample_times(self) -> np.ndarray:
        """``t_start + k h/2`` for ``k = 0..2n`` (RK4 stage times)."""
        n = self.n_steps
        return self.t_start + (self.t_end - self.t_start) * np.arange(2 * n + 1) / (2 * n)


@dataclass
class EvolutionResult:
    times: np.ndarray
    trajectory: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.trajectory[-1]


@dataclass(frozen=True)
class Ensemble:
    """Mixture of picture-``j`` pure states with constant weights summing to one."""

    states: tuple
    weights: tuple

    def __init__(self, states: Sequence[StatePair], weights: Sequence[float]):
        states, weights = tuple(states), tuple(float(w) for w in weights)
        if not states or len(states) != len(weights):
            raise ValueError("need one positive weight per state")
        if any(w <= 0 for w in weights):
            raise ValueError("weights must be positive")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {sum(weights)!r}, not 1")
        if len({s.picture for s in states}) != 1:
            raise ValueError("all ensemble states must live in the same picture")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "weights", weights)

    @property
    def picture(self) -> int:
        return self.states[0].picture


def density_from_ensemble(ensemble: Ensemble, j: int | None = None) -> np.ndarray:
    """``rho_j = sum_k p_k |psi_k> <<psi_k| / <<psi_k|psi_k>``."""
    if j is not None and j != ensemble.picture:
        raise ValueError(f"ensemble lives in picture {ensemble.picture}, not {j}")
    d = ensemble.states[0].ket.shape[0]
    rho = np.zeros((d, d), dtype=complex)
    for state, p in zip(ensemble.states, ensemble.weights):
        norm = state.norm
        if abs(norm) < ZERO_NORM_TOL:
            raise ZeroNorm(f"<<psi|psi> = {norm:.3e}")
        rho += (p / norm) * np.outer(state.ket, state.conj.conj())
    return rho


# --- integration engine ------------------------------------------------------

# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _rhs(L, R, Y):
    out = L @ Y
    if R is not None:
        out = out - Y @ R
    return -1j * out


Sampler = Callable[[float], tuple]  # t -> (L, R or None, extras)


def _run_rk4(grid: TimeGrid, y0: np.ndarray, sampler: Sampler):
    times = grid.sample_times()
    Ls, Rs, extras = [], [], []
    for k, t in enumerate(times):
        L, R, extra = sampler(float(t))
        Ls.append(L)
        Rs.append(R)
        if k % 2 == 0:
            extras.append(extra)
    R_arr = None if Rs[0] is None else np.array(Rs)
    h = (grid.t_end - grid.t_start) / grid.n_steps
    traj = _core.rk4_flow(np.array(Ls), R_arr, y0, h)
    return times[::2].copy(), traj, extras


def _run_rk45(grid: TimeGrid, y0: np.ndarray, sampler: Sampler):
    t, h = grid.t_start, min(grid.step, grid.t_end - grid.t_start)
    Y = np.array(y0, dtype=complex)
    L, R, extra = sampler(t)
    times, traj, extras = [t], [Y.copy()], [extra]
    h_min = 1e-14 * max(1.0, abs(grid.t_end))
    k1 = _rhs(L, R, Y)
    steps = 0
    while t < grid.t_end:
        if steps >= grid.max_steps:
            raise StepRejection(f"exceeded {grid.max_steps} steps before t_end")
        h = min(h, grid.t_end - t)
        ks = [k1]
        for i in range(1, 7):
            Yi = Y + h * sum(a * kk for a, kk in zip(_DP_A[i], ks))
            Li, Ri, _ = sampler(t + _DP_C[i] * h)
            ks.append(_rhs(Li, Ri, Yi))
        Y5 = Y + h * sum(b * kk for b, kk in zip(_DP_B5, ks) if b)
        err = h * sum((b5 - b4) * kk for b5, b4, kk in zip(_DP_B5, _DP_B4, ks))
        scale = grid.abs_tol + grid.rel_tol * np.maximum(np.abs(Y), np.abs(Y5))
        with np.errstate(over="ignore"):
            err_norm = float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))
        steps += 1
        if err_norm <= 1.0:
            t = t + h
            Y = Y5
            k1 = ks[6]  # first-same-as-last
            _, _, extra = sampler(t)
            times.append(t)
            traj.append(Y.copy())
            extras.append(extra)
        factor = 0.9 * err_norm ** (-0.2) if err_norm > 0 else 5.0
        h = h * min(5.0, max(0.2, factor))
        if h < h_min:
            raise StepRejection(f"step size underflow at t={t:.6g} (tolerance unreachable)")
    return np.array(times), np.array(traj), extras


def _integrate(grid: TimeGrid, y0: np.ndarray, sampler: Sampler):
    log.debug("integrating %s over [%g, %g], step %g", grid.method, grid.t_start, grid.t_end, grid.step)
    if grid.method == "rk4":
        return _run_rk4(grid, y0, sampler)
    return _run_rk45(grid, y0, sampler)


# --- the four equations --------------------------------------------------------


def integrate_schrodinger(
    dyson: FactorizedDysonMap,
    h: Hamiltonian,
    j: int,
    state0: StatePair,
    grid: TimeGrid,
    observables: Mapping[str, np.ndarray] | None = None,
) -> EvolutionResult:
    """Evolve ``|psi>`` under ``G_j`` and ``|psi>>`` under ``G_j^+`` together.

    ``trajectory[k]`` has shape ``(2, d)``: row 0 is the ket, row 1 the
    conjugate ket. ``observables`` maps names to Hermitian-picture operators
    whose picture-``j`` expectation values are tracked in ``scalars``.
    """
    dyson.check_index(j)
    if state0.picture != j:
        raise ValueError(f"initial state lives in picture {state0.picture}, not {j}")
    observables = dict(observables or {})
    d = dyson.dim

    def sampler(t):
        fam = picture_family(dyson, h, t)
        G = fam.generators[j]
        L = np.zeros((2 * d, 2 * d), dtype=complex)
        L[:d, :d] = G
        L[d:, d:] = dagger(G)
        H, theta = fam.hamiltonians[j], fam.metrics[j]
        extra = {
            "qh_residual": float(np.linalg.norm(dagger(H) @ theta - theta @ H)),
            "observables": {
                name: fam.partial_inverses[j] @ a @ fam.partials[j] for name, a in observables.items()
            },
        }
        return L, None, extra

    y0 = np.concatenate([state0.ket, state0.conj]).reshape(2 * d, 1)
    times, traj, extras = _integrate(grid, y0, sampler)
    kets, conjs = traj[:, :d, 0], traj[:, d:, 0]
    norms = np.einsum("ki,ki->k", conjs.conj(), kets)
    scalars = {}
    for name in observables:
        vals = np.array(
            [np.vdot(c, ex["observables"][name] @ k) for k, c, ex in zip(kets, conjs, extras)]
        )
        scalars[name] = vals / norms
    diagnostics = {
        "physical_norm": norms.real.copy(),
        "physical_norm_drift": np.abs(norms - norms[0]),
        "qh_residual": np.array([ex["qh_residual"] for ex in extras]),
    }
    return EvolutionResult(times, np.stack([kets, conjs], axis=1), diagnostics, scalars)


def states_from_result(result: EvolutionResult, j: int) -> list[StatePair]:
    return [StatePair(j, snap[0], snap[1]) for snap in result.trajectory]


def integrate_heisenberg(
    dyson: FactorizedDysonMap, j: int, A0: np.ndarray, grid: TimeGrid
) -> EvolutionResult:
    """``i dA_j/dt = A_j Sigma_{j+1} - Sigma_{j+1} A_j``.

    ``A0`` is the picture-``j`` representative at ``t_start`` of a constant
    Hermitian-picture observable. ``diagnostics["conjugation_residual"]``
    compares against ``Omega_[j]^-1 a Omega_[j]`` rebuilt from the factors.
    """
    dyson.check_index(j)
    fam0 = picture_family(dyson, None, grid.t_start)
    a = fam0.partials[j] @ np.asarray(A0, dtype=complex) @ fam0.partial_inverses[j]

    def sampler(t):
        fam = picture_family(dyson, None, t)
        S = fam.sigma(j + 1)
        direct = fam.partial_inverses[j] @ a @ fam.partials[j]
        return -S, -S, direct

    times, traj, extras = _integrate(grid, np.asarray(A0, dtype=complex), sampler)
    resid = np.array([np.linalg.norm(A - D) for A, D in zip(traj, extras)])
    return EvolutionResult(times, traj, {"conjugation_residual": resid})


def _pair_drift(ref: np.ndarray, cur: np.ndarray) -> float:
    cost = np.abs(ref[:, None] - cur[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def _min_gap(evals: np.ndarray) -> float:
    if len(evals) < 2:
        return np.inf
    diff = np.abs(evals[:, None] - evals[None, :])
    diff[np.diag_indices_from(diff)] = np.inf
    return float(diff.min())


def integrate_density(
    dyson: FactorizedDysonMap,
    h: Hamiltonian,
    j: int,
    ensemble0: Ensemble,
    grid: TimeGrid,
    observables: Mapping[str, np.ndarray] | None = None,
) -> EvolutionResult:
    """``i d rho_j/dt = G_j rho_j - rho_j G_j``.

    Diagnostics: ``trace``, ``trace_drift``, ``spectral_drift`` (eigenvalues
    matched to the initial ones by minimal-cost assignment) and
    ``gap_flag`` (1 where the smallest eigenvalue gap drops below 1e-6 and
    the matching is unreliable).
    """
    dyson.check_index(j)
    rho0 = density_from_ensemble(ensemble0, j)
    observables = dict(observables or {})

    def sampler(t):
        fam = picture_family(dyson, h, t)
        G = fam.generators[j]
        obs = {name: fam.partial_inverses[j] @ a @ fam.partials[j] for name, a in observables.items()}
        return G, G, obs

    times, traj, extras = _integrate(grid, rho0, sampler)
    traces = np.trace(traj, axis1=1, axis2=2)
    ev0 = np.linalg.eigvals(traj[0])
    drift, gaps = [], []
    for rho in traj:
        ev = np.linalg.eigvals(rho)
        drift.append(_pair_drift(ev0, ev))
        gaps.append(_min_gap(ev))
    scalars = {
        name: np.array([np.trace(rho @ ex[name]) for rho, ex in zip(traj, extras)]) for name in observables
    }
    diagnostics = {
        "trace": traces.real.copy(),
        "trace_drift": np.abs(traces - traces[0]),
        "spectral_drift": np.array(drift),
        "gap_flag": (np.array(gaps) < GAP_FLAG).astype(float),
    }
    return EvolutionResult(times, traj, diagnostics, scalars)


def integrate_metric(dyson: FactorizedDysonMap, grid: TimeGrid) -> EvolutionResult:
    """``i dTheta/dt = Theta Sigma - Sigma^+ Theta`` with ``Sigma = Sigma_1``.

    ``diagnostics["metric_error"]`` is the distance to ``Omega^+ Omega``
    built directly; ``diagnostics["hermiticity"]`` is ``||Theta - Theta^+||``.
    """

    def sampler(t):
        fam = picture_family(dyson, None, t)
        S = fam.sigma(1)
        return -dagger(S), -S, fam.metrics[0]

    theta0 = picture_family(dyson, None, grid.t_start).metrics[0]
    times, traj, extras = _integrate(grid, theta0, sampler)
    diagnostics = {
        "metric_error": np.array([np.linalg.norm(T - D) for T, D in zip(traj, extras)]),
        "hermiticity": np.array([np.linalg.norm(T - dagger(T)) for T in traj]),
    }
    return EvolutionResult(times, traj, diagnostics)
