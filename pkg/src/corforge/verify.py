"""Invariant checks shared by the ``verify`` command and the test-suite.

Each check returns an :class:`Invariant` holding the measured residual and the
tolerance it was judged against. Tolerances are fixed here, not tuned per run.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .evolution import (
    Ensemble,
    TimeGrid,
    integrate_density,
    integrate_heisenberg,
    integrate_metric,
    integrate_schrodinger,
)
from .linop import dagger, diagnostics, finite_diff_derivative, hermiticity_residual
from .models import ModelScenario, fring_tenney_closed_form, spectrum_lowest
from .pictures import StatePair, move_state, picture_family
from .weyl import composite_coriolis_symbolic, coriolis_direct_symbolic

TOL = {
    "coriolis_recursion": 1e-6,
    "norm_conservation": 1e-8,
    "picture_independence": 1e-7,
    "heisenberg_oracle": 1e-6,
    "heisenberg_duality": 1e-6,
    "density_trace": 1e-10,
    "density_spectrum": 1e-7,
    "metric_ode": 1e-8,
    "metric_hermiticity": 1e-9,
    "quasi_hermiticity": 1e-9,
    "isospectrality": 1e-8,
    "metric_positivity": 0.0,
    "symbolic_recursion": 0.0,
}
FD_STEP = 1e-5
SAMPLE_COUNT = 10


@dataclass
class Invariant:
    name: str
    residual: float
    tolerance: float
    applicable: bool = True
    detail: str = ""

    @property
    def passed(self) -> bool:
        return (not self.applicable) or self.residual <= self.tolerance

    def as_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def sample_times(grid: TimeGrid, count: int = SAMPLE_COUNT) -> np.ndarray:
    return np.linspace(grid.t_start, grid.t_end, count)


def initial_state(model: ModelScenario, j: int) -> StatePair:
    t0 = model.grid.t_start
    state = StatePair.pure(model.dyson, model.initial_picture, t0, model.initial_state)
    return move_state(state, j, model.dyson, t0)


def default_ensemble(model: ModelScenario, j: int) -> Ensemble:
    """The scenario's ensemble moved to picture ``j``; otherwise two
    ``Theta^[j]``-orthonormal states ``Omega_[j]^-1 e_k`` with weights 0.7, 0.3."""
    t0 = model.grid.t_start
    if model.ensemble:
        states = [
            move_state(StatePair.pure(model.dyson, model.initial_picture, t0, s), j, model.dyson, t0)
            for s in model.ensemble["states"]
        ]
        return Ensemble(states, model.ensemble["weights"])
    fam = picture_family(model.dyson, None, t0)
    if model.dim == 1:
        return Ensemble([StatePair(j, fam.partial_inverses[j][:, 0], dagger(fam.partials[j])[:, 0])], [1.0])
    states = [StatePair(j, fam.partial_inverses[j][:, k], dagger(fam.partials[j])[:, k]) for k in range(2)]
    return Ensemble(states, [0.7, 0.3])


def hamiltonian_is_hermitian(model: ModelScenario, times) -> tuple[bool, float]:
    worst = 0.0
    for t in times:
        h = model.hamiltonian(t)
        worst = max(worst, hermiticity_residual(h) / max(1.0, np.linalg.norm(h)))
    return worst <= 1e-10, worst


# --- individual checks -----------------------------------------------------------


def check_coriolis_recursion(model: ModelScenario, times=None) -> Invariant:
    """Recursive ``Sigma_1`` against ``i Omega^-1 dOmega/dt`` by central differences."""
    times = sample_times(model.grid) if times is None else times
    worst = 0.0
    for t in times:
        fam = picture_family(model.dyson, None, t)
        fd = finite_diff_derivative(model.dyson.omega, t, FD_STEP)
        direct = 1j * fam.partial_inverses[0] @ fd
        worst = max(worst, float(np.linalg.norm(fam.sigma(1) - direct)))
    return Invariant("coriolis_recursion", worst, TOL["coriolis_recursion"])


def check_symbolic(model: ModelScenario) -> list[Invariant]:
    if not model.symbolic_factors:
        return []
    recursion = composite_coriolis_symbolic(model.symbolic_factors)[-1]
    direct = coriolis_direct_symbolic(model.symbolic_factors)
    out = [Invariant("symbolic_recursion", float(recursion != direct), 0.0, detail=str(recursion))]
    if [f.coefficient for f in model.symbolic_factors] == ["delta", "gamma", "beta", "alpha"]:
        closed = fring_tenney_closed_form()
        out.append(Invariant("symbolic_closed_form", float(recursion != closed), 0.0, detail=str(closed)))
    return out


def run_pictures(model: ModelScenario, jobs: int = 1) -> tuple[dict, dict]:
    """Integrate the scenario's state in every picture; returns results and timings."""

    def one(j):
        start = time.perf_counter()
        res = integrate_schrodinger(
            model.dyson, model.hamiltonian, j, initial_state(model, j), model.grid, model.observables
        )
        return j, res, time.perf_counter() - start

    pictures = range(model.N + 1)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            done = list(pool.map(one, pictures))
    else:
        done = [one(j) for j in pictures]
    return {j: r for j, r, _ in done}, {j: dt for j, _, dt in done}


def check_norm_conservation(results: dict) -> Invariant:
    worst = max(float(r.diagnostics["physical_norm_drift"].max()) for r in results.values())
    return Invariant("norm_conservation", worst, TOL["norm_conservation"])


def check_picture_independence(results: dict) -> Invariant:
    pictures = sorted(results)
    ref = results[pictures[-1]]
    worst = 0.0
    if not ref.scalars:
        return Invariant("picture_independence", 0.0, TOL["picture_independence"], False, "no observables")
    for j in pictures[:-1]:
        for name, vals in results[j].scalars.items():
            worst = max(worst, float(np.abs(vals - ref.scalars[name]).max()))
    return Invariant("picture_independence", worst, TOL["picture_independence"])


def check_heisenberg(model: ModelScenario, results: dict) -> list[Invariant]:
    """ODE-evolved ``A_j`` against direct conjugation, and the expectation of
    evolved operator in evolved state against the Hermitian-picture value."""
    if not model.observables:
        return [
            Invariant("heisenberg_oracle", 0.0, TOL["heisenberg_oracle"], False, "no observables"),
            Invariant("heisenberg_duality", 0.0, TOL["heisenberg_duality"], False, "no observables"),
        ]
    t0 = model.grid.t_start
    fam0 = picture_family(model.dyson, None, t0)
    oracle = duality = 0.0
    ref = results[model.N]
    for j in range(model.N):
        kets = results[j].trajectory
        for name, a in model.observables.items():
            A0 = fam0.partial_inverses[j] @ a @ fam0.partials[j]
            res = integrate_heisenberg(model.dyson, j, A0, model.grid)
            oracle = max(oracle, float(res.diagnostics["conjugation_residual"][-1]))
            vals = np.array(
                [np.vdot(s[1], A @ s[0]) / np.vdot(s[1], s[0]) for s, A in zip(kets, res.trajectory)]
            )
            duality = max(duality, float(np.abs(vals - ref.scalars[name]).max()))
    return [
        Invariant("heisenberg_oracle", oracle, TOL["heisenberg_oracle"]),
        Invariant("heisenberg_duality", duality, TOL["heisenberg_duality"]),
    ]


def check_density(model: ModelScenario, j: int | None = None) -> list[Invariant]:
    j = model.picture if j is None else j
    res = integrate_density(model.dyson, model.hamiltonian, j, default_ensemble(model, j), model.grid)
    flagged = bool(res.diagnostics["gap_flag"].any())
    return [
        Invariant("density_trace", float(res.diagnostics["trace_drift"].max()), TOL["density_trace"]),
        Invariant(
            "density_spectrum",
            float(res.diagnostics["spectral_drift"].max()),
            TOL["density_spectrum"],
            detail="near-degenerate eigenvalues; pairing approximate" if flagged else "",
        ),
    ]


def check_metric(model: ModelScenario) -> list[Invariant]:
    res = integrate_metric(model.dyson, model.grid)
    scale = max(1.0, float(np.linalg.norm(res.trajectory[0])))
    return [
        Invariant("metric_ode", float(res.diagnostics["metric_error"].max()) / scale, TOL["metric_ode"],
                  detail="relative to ||Theta(t_start)||" if scale > 1 else ""),
        Invariant("metric_hermiticity", float(res.diagnostics["hermiticity"].max()) / scale, TOL["metric_hermiticity"]),
    ]


def check_ladder(model: ModelScenario, times=None) -> list[Invariant]:
    """Quasi-Hermiticity of every ``H_j``, isospectrality across ``j``, metric positivity."""
    times = sample_times(model.grid) if times is None else times
    hermitian, h_res = hamiltonian_is_hermitian(model, times)
    qh = iso = 0.0
    positive = True
    for t in times:
        fam = picture_family(model.dyson, model.hamiltonian, t)
        ref = spectrum_lowest(fam.hamiltonians[model.N], model.dim)
        scale = max(1.0, float(np.abs(ref).max()))
        for j in range(model.N + 1):
            H, theta = fam.hamiltonians[j], fam.metrics[j]
            norm = max(1.0, float(np.linalg.norm(H) * np.linalg.norm(theta)))
            qh = max(qh, float(np.linalg.norm(dagger(H) @ theta - theta @ H)) / norm)
            iso = max(iso, float(np.abs(spectrum_lowest(H, model.dim) - ref).max()) / scale)
            positive &= bool(diagnostics(theta).is_positive_definite)
    detail = "" if hermitian else f"h(t) not Hermitian (relative residual {h_res:.3e})"
    return [
        Invariant("quasi_hermiticity", qh, TOL["quasi_hermiticity"], hermitian, detail),
        Invariant("isospectrality", iso, TOL["isospectrality"]),
        Invariant("metric_positivity", 0.0 if positive else 1.0, TOL["metric_positivity"]),
    ]


def verify_all(model: ModelScenario, jobs: int = 1) -> tuple[list[Invariant], dict]:
    """Every invariant once; also returns wall-clock seconds per picture."""
    results, timings = run_pictures(model, jobs)
    invariants = [check_coriolis_recursion(model)]
    invariants += check_symbolic(model)
    invariants.append(check_norm_conservation(results))
    invariants.append(check_picture_independence(results))
    invariants += check_heisenberg(model, results)
    invariants += check_density(model)
    invariants += check_metric(model)
    invariants += check_ladder(model)
    return invariants, timings
