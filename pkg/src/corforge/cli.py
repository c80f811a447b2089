"""Command-line entry point.

Usage::

    corforge {simulate,heisenberg,density,metric,verify,spectrum,coriolis,sweep} SCENARIO
             [--picture J] [--jobs K] [--out DIR] [--symbolic]

``SCENARIO`` is a JSON file or a builtin name (``two-level``, ``fring-tenney``,
``jones-mateo``). Exit codes: 0 success, 1 usage/parse/validation/IO error,
2 numerical failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import _core
from .errors import CorforgeError, ParseError, ValidationError, VerificationFailure
from .evolution import EvolutionResult, integrate_density, integrate_heisenberg, integrate_metric
from .linop import finite_diff_derivative
from .models import BUILTINS, ModelScenario, build_jones_mateo, spectrum_lowest
from .pictures import picture_family
from .scenario import ScenarioFile, emit_csv, fmt, parse_scenario
from .verify import (
    FD_STEP,
    Invariant,
    check_coriolis_recursion,
    check_density,
    check_heisenberg,
    check_ladder,
    check_metric,
    check_norm_conservation,
    check_picture_independence,
    check_symbolic,
    default_ensemble,
    run_pictures,
    sample_times,
    verify_all,
)
from .weyl import composite_coriolis_symbolic

COMMANDS = ("simulate", "heisenberg", "density", "metric", "verify", "spectrum", "coriolis", "sweep")
log = logging.getLogger("corforge")


class UsageError(CorforgeError):
    exit_code = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="corforge", description="Factorized non-Hermitian interaction-picture toolkit.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("scenario", help="scenario JSON file or builtin name")
    parser.add_argument("--picture", type=int, default=None, help="picture index j (0..N)")
    parser.add_argument("--jobs", type=int, default=1, help="parallel runs across pictures")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--symbolic", action="store_true", help="coriolis: exact operator algebra")
    parser.add_argument("--g", type=float, default=1.0, help="jones-mateo coupling")
    parser.add_argument("--levels", type=int, default=5, help="spectrum: number of levels")
    parser.add_argument("--dims", default="64,96", help="jones-mateo: two truncation sizes")
    return parser


def _setup_logging():
    level = os.environ.get("COR_FORGE_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


# --- loading -------------------------------------------------------------------


def load(name: str) -> tuple[ModelScenario | None, ScenarioFile | None]:
    if name == "jones-mateo":
        return None, None
    if name in BUILTINS:
        return BUILTINS[name](), None
    path = Path(name)
    if not path.exists():
        raise UsageError(f"no such scenario file or builtin: {name!r}")
    sf = parse_scenario(path)
    return sf.to_model(), sf


def _echo(model: ModelScenario) -> dict:
    g = model.grid
    return {
        "name": model.name,
        "mode": model.mode,
        "dimension": model.dim,
        "factors": [
            {"label": f.label, "coefficient": f.coefficient.text} for f in model.dyson.factors
        ],
        "picture": model.picture,
        "time": {"start": g.t_start, "end": g.t_end, "step": g.step, "method": g.method},
    }


class Run:
    """Collects artifacts and invariants for one command invocation."""

    def __init__(self, command: str, name: str, out: Path, outputs: dict | None):
        self.command = command
        self.name = name
        self.out = out
        self.outputs = outputs or {}
        self.invariants: list[Invariant] = []
        self.timings: dict = {}
        self.artifacts: list[str] = []
        self.extra: dict = {}

    def path(self, kind: str, suffix: str = "") -> Path:
        default = {"csv": f"{self.name}.csv", "report": f"{self.name}_report.json"}[kind]
        base = Path(self.outputs.get(kind, default))
        stem = f"{base.stem}_{self.command}{suffix}"
        return self.out / base.with_name(stem + base.suffix)

    def csv(self, result: EvolutionResult, suffix: str = "", **kw):
        path = self.path("csv", suffix)
        path.parent.mkdir(parents=True, exist_ok=True)
        emit_csv(result, path, **kw)
        self.artifacts.append(path.relative_to(self.out).as_posix())

    def write_rows(self, header: list[str], rows: list[list], suffix: str = ""):
        path = self.path("csv", suffix)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [",".join(header)] + [",".join(r) for r in rows]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")
        self.artifacts.append(path.relative_to(self.out).as_posix())

    @property
    def exit_status(self) -> int:
        return 3 if any(not inv.passed for inv in self.invariants) else 0

    def report(self, echo: dict) -> Path:
        path = self.path("report")
        path.parent.mkdir(parents=True, exist_ok=True)
        doc = {
            "command": self.command,
            "scenario": echo,
            "invariants": [inv.as_dict() for inv in self.invariants],
            "artifacts": self.artifacts,
            **self.extra,
            "exit_status": self.exit_status,
            "timings": {str(k): v for k, v in self.timings.items()},
        }
        path.write_text(json.dumps(doc, indent=2, default=float) + "\n", encoding="utf-8")
        return path


# --- commands --------------------------------------------------------------------


def _picture(model: ModelScenario, override: int | None) -> int:
    j = model.picture if override is None else override
    if not 0 <= j <= model.N:
        raise ValidationError("picture", f"must lie in [0, {model.N}], got {j}")
    return j


def cmd_simulate(model, run: Run, j: int, args):
    from .evolution import integrate_schrodinger
    from .verify import initial_state

    start = time.perf_counter()
    res = integrate_schrodinger(model.dyson, model.hamiltonian, j, initial_state(model, j), model.grid, model.observables)
    run.timings[j] = time.perf_counter() - start
    run.csv(res, diagnostics={k: res.diagnostics[k] for k in ("physical_norm", "qh_residual")})
    run.invariants.append(check_norm_conservation({j: res}))


def cmd_heisenberg(model, run: Run, j: int, args):
    fam0 = picture_family(model.dyson, None, model.grid.t_start)
    results, run.timings = run_pictures(model, args.jobs)
    ket = results[j]
    scalars, diags = {}, {}
    for name, a in model.observables.items():
        A0 = fam0.partial_inverses[j] @ a @ fam0.partials[j]
        res = integrate_heisenberg(model.dyson, j, A0, model.grid)
        traj = ket.trajectory
        scalars[name] = np.array([np.vdot(s[1], A @ s[0]) / np.vdot(s[1], s[0]) for s, A in zip(traj, res.trajectory)])
        diags[f"{name}_conjugation_residual"] = res.diagnostics["conjugation_residual"]
    run.csv(ket, scalars=scalars, diagnostics=diags)
    run.invariants += check_heisenberg(model, results)


def cmd_density(model, run: Run, j: int, args):
    start = time.perf_counter()
    res = integrate_density(model.dyson, model.hamiltonian, j, default_ensemble(model, j), model.grid, model.observables)
    run.timings[j] = time.perf_counter() - start
    run.csv(res, diagnostics={k: res.diagnostics[k] for k in ("trace", "trace_drift", "spectral_drift")})
    run.invariants += check_density(model, j)


def cmd_metric(model, run: Run, j: int, args):
    start = time.perf_counter()
    res = integrate_metric(model.dyson, model.grid)
    run.timings[0] = time.perf_counter() - start
    run.csv(res)
    run.invariants += check_metric(model)
    run.invariants.append(check_ladder(model)[2])


def cmd_verify(model, run: Run, j: int, args):
    run.invariants, run.timings = verify_all(model, args.jobs)


def cmd_sweep(model, run: Run, j: int, args):
    results, run.timings = run_pictures(model, args.jobs)
    for k in sorted(results):
        res = results[k]
        run.csv(res, suffix=f"_j{k}", diagnostics={"physical_norm": res.diagnostics["physical_norm"]})
    run.invariants.append(check_norm_conservation(results))
    run.invariants.append(check_picture_independence(results))


def cmd_spectrum(model, run: Run, j: int, args):
    k = min(args.levels, model.dim)
    header = ["t", "j", "n", "H_re", "H_im", "G_re", "G_im"]
    rows = []
    for t in (model.grid.t_start, 0.5 * (model.grid.t_start + model.grid.t_end), model.grid.t_end):
        fam = picture_family(model.dyson, model.hamiltonian, t)
        for jj in range(model.N + 1):
            eh = spectrum_lowest(fam.hamiltonians[jj], k)
            eg = spectrum_lowest(fam.generators[jj], k)
            for n in range(k):
                rows.append([fmt(t), str(jj), str(n), fmt(eh[n].real), fmt(eh[n].imag), fmt(eg[n].real), fmt(eg[n].imag)])
    run.write_rows(header, rows)
    run.invariants.append(check_ladder(model)[1])


def cmd_coriolis(model, run: Run, j: int, args):
    if args.symbolic:
        if not model.symbolic_factors:
            raise UsageError("--symbolic needs factors with x or p power generators")
        sigmas = composite_coriolis_symbolic(model.symbolic_factors)
        text = str(sigmas[-1])
        print(f"Sigma(t) = {text}")
        run.extra["symbolic"] = {f"Sigma_{model.N - i}": str(s) for i, s in enumerate(sigmas)}
        run.invariants += check_symbolic(model)
        return
    rows = []
    for t in sample_times(model.grid, 21):
        fam = picture_family(model.dyson, None, t)
        direct = 1j * fam.partial_inverses[0] @ finite_diff_derivative(model.dyson.omega, t, FD_STEP)
        rows.append([fmt(t), fmt(np.linalg.norm(fam.sigma(1))), fmt(np.linalg.norm(fam.sigma(1) - direct))])
    run.write_rows(["t", "sigma1_norm", "recursion_vs_direct"], rows)
    run.invariants.append(check_coriolis_recursion(model))


HANDLERS = {
    "simulate": cmd_simulate,
    "heisenberg": cmd_heisenberg,
    "density": cmd_density,
    "metric": cmd_metric,
    "verify": cmd_verify,
    "spectrum": cmd_spectrum,
    "coriolis": cmd_coriolis,
    "sweep": cmd_sweep,
}


def jones_mateo_invariants(g: float, dims: tuple[int, int], levels: int) -> tuple[list, list[Invariant]]:
    d1, d2 = dims
    e1 = spectrum_lowest(build_jones_mateo(g, d1), levels)
    e2 = spectrum_lowest(build_jones_mateo(g, d2), levels)
    full = np.linalg.eigvals(build_jones_mateo(g, d1))
    rows = [[str(n), fmt(e1[n].real), fmt(e1[n].imag), fmt(e2[n].real), fmt(abs(e1[n] - e2[n]))] for n in range(levels)]
    return rows, [
        Invariant("jm_real_spectrum", float(np.abs(full.imag).max()), 1e-9),
        Invariant("jm_convergence", float(np.abs(e1 - e2).max()), 1e-6),
    ]


def jones_mateo_scaling(levels: int = 5, d: int = 128) -> Invariant:
    base = spectrum_lowest(build_jones_mateo(1.0, d), levels).real
    worst = 0.0
    for g in (0.5, 2.0):
        e = spectrum_lowest(build_jones_mateo(g, d), levels).real
        worst = max(worst, float(np.abs(e / (g ** (1 / 3) * base) - 1.0).max()))
    return Invariant("jm_scaling", worst, 1e-5)


def run_jones_mateo(args, out: Path) -> int:
    if args.command not in ("spectrum", "verify"):
        raise UsageError("jones-mateo supports only 'spectrum' and 'verify'")
    dims = tuple(int(v) for v in args.dims.split(","))
    if len(dims) != 2:
        raise UsageError("--dims takes two comma-separated sizes")
    run = Run(args.command, "jones_mateo", out, None)
    start = time.perf_counter()
    rows, invariants = jones_mateo_invariants(args.g, dims, args.levels)
    run.write_rows(["n", "E_re", "E_im", f"E_d{dims[1]}", "convergence"], rows)
    run.invariants = invariants
    if args.command == "verify":
        run.invariants.append(jones_mateo_scaling(args.levels))
    run.timings["spectrum"] = time.perf_counter() - start
    echo = {"name": "jones-mateo", "g": args.g, "dims": list(dims), "levels": args.levels}
    run.report(echo)
    _print_summary(run)
    return run.exit_status


def _print_summary(run: Run):
    for inv in run.invariants:
        state = "PASS" if inv.passed else "FAIL"
        if not inv.applicable:
            state = "N/A "
        print(f"{state} {inv.name}: residual {inv.residual:.3e} (tol {inv.tolerance:.0e}) {inv.detail}".rstrip())


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        if args.scenario == "jones-mateo":
            return run_jones_mateo(args, out)
        model, sf = load(args.scenario)
        j = _picture(model, args.picture)
        model.picture = j
        name = (sf.name if sf else model.name).replace("-", "_")
        run = Run(args.command, name, out, sf.outputs if sf else None)
        log.info("running %s on %s (picture %d, backend %s)", args.command, model.name, j, _core.BACKEND)
        HANDLERS[args.command](model, run, j, args)
        run.report(_echo(model))
        _print_summary(run)
        return run.exit_status
    except (ParseError, ValidationError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 3
    except CorforgeError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
