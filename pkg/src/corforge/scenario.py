"""Scenario files (JSON) and CSV output.

A scenario lists its Dyson factors with ``Omega_1`` (the factor applied first
to picture-0 kets) first. Complex numbers are ``[re, im]`` pairs throughout.
See ``scenarios/two_level.json`` for a complete example.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .evolution import EvolutionResult, TimeGrid
from .expr import CoefficientFn
from .linop import PAULI_X, PAULI_Y, PAULI_Z, SeparableFactor, build_osc_operators
from .models import BUILTINS, ModelScenario, bottom_up_hamiltonian
from .pictures import FactorizedDysonMap, picture_family
from .weyl import I, SymbolicFactor, WeylPolynomial

SCHEMA_VERSION = 1
SCENARIO_DIR = Path(__file__).parent / "scenarios"

# builtin name -> (a, b) with generator x^a p^b on the oscillator basis
_OSCILLATOR_BUILTINS = {"x": (1, 0), "p": (0, 1), "p2": (0, 2), "p3": (0, 3), "x2": (2, 0), "x4": (4, 0), "p4": (0, 4)}
_PAULI_BUILTINS = {"pauli_x": PAULI_X, "pauli_y": PAULI_Y, "pauli_z": PAULI_Z}


def _complex(value, where: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if (
        isinstance(value, list)
        and len(value) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        return complex(value[0], value[1])
    raise ValidationError(where, f"expected [re, im], got {value!r}")


def _vector(value, d: int, where: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != d:
        raise ValidationError(where, f"expected {d} complex entries")
    return np.array([_complex(v, f"{where}[{i}]") for i, v in enumerate(value)], dtype=complex)


def matrix_from_spec(spec, d: int, where: str) -> tuple[np.ndarray, WeylPolynomial | None]:
    """Resolve a matrix spec; also return its exact operator when it has one.

    A spec is a builtin name, ``{"builtin": name, "scale": [re, im]}``, or a
    literal ``d x d`` list of ``[re, im]`` pairs.
    """
    scale = 1.0 + 0j
    if isinstance(spec, dict):
        unknown = set(spec) - {"builtin", "scale"}
        if unknown or "builtin" not in spec:
            raise ValidationError(where, "object specs need 'builtin' and optional 'scale'")
        scale = _complex(spec.get("scale", 1.0), f"{where}.scale")
        spec = spec["builtin"]
    if isinstance(spec, str):
        if spec in _OSCILLATOR_BUILTINS:
            a, b = _OSCILLATOR_BUILTINS[spec]
            Xm, Pm = build_osc_operators(d)
            M = np.linalg.matrix_power(Xm, a) @ np.linalg.matrix_power(Pm, b)
            poly = WeylPolynomial.monomial(a, b)
            if scale != 1:
                re, im = scale.real, scale.imag
                if re == 0 and im == 1:
                    poly = poly.scale(I)
                elif im == 0:
                    poly = poly.scale(re)
                else:
                    poly = poly.scale(re) + poly.scale(I * im)
            return scale * M, poly
        if spec in _PAULI_BUILTINS:
            if d != 2:
                raise ValidationError(where, f"{spec} needs dimension 2, scenario has {d}")
            return scale * _PAULI_BUILTINS[spec], None
        if spec == "identity":
            return scale * np.eye(d, dtype=complex), WeylPolynomial.const(1) if scale == 1 else None
        raise ValidationError(where, f"unknown builtin matrix {spec!r}")
    if isinstance(spec, list):
        if len(spec) != d or any(not isinstance(row, list) or len(row) != d for row in spec):
            raise ValidationError(where, f"literal matrix must be {d}x{d}")
        M = np.array([[_complex(v, f"{where}[{r}][{c}]") for c, v in enumerate(row)] for r, row in enumerate(spec)])
        if not np.all(np.isfinite(M)):
            raise ValidationError(where, "matrix entries must be finite")
        return scale * M, None
    raise ValidationError(where, f"unsupported matrix spec {spec!r}")


def _line_of(text: str, needle: str) -> int | None:
    idx = text.find(json.dumps(needle))
    return text.count("\n", 0, idx) + 1 if idx >= 0 else None


def _coefficient(source, raw: str, where: str) -> CoefficientFn:
    if isinstance(source, (int, float)) and not isinstance(source, bool):
        source = repr(float(source))
    if not isinstance(source, str):
        raise ValidationError(where, "coefficient must be an expression string")
    try:
        return CoefficientFn(source)
    except ParseError as exc:
        raise ParseError(f"{where}: {exc}", line=_line_of(raw, source), token=exc.token) from exc


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ValidationError(f"{where}.{key}" if where else key, "missing required field")
    return obj[key]


@dataclass
class ScenarioFile:
    """Validated contents of a scenario JSON file."""

    path: Path | None
    schema_version: int
    dimension: int
    factors: list  # SeparableFactor
    symbolic: list | None  # SymbolicFactor, when every generator has an exact form
    mode: str
    terms: list  # (CoefficientFn, matrix)
    picture: int
    grid: TimeGrid
    initial_state: np.ndarray
    initial_state_picture: int
    ensemble: dict | None
    observables: dict  # name -> (matrix, defined_in_picture)
    outputs: dict = field(default_factory=dict)
    name: str = "scenario"

    @property
    def N(self) -> int:
        return len(self.factors)

    def term_sum(self, t: float) -> np.ndarray:
        out = np.zeros((self.dimension, self.dimension), dtype=complex)
        for coeff, M in self.terms:
            out += coeff(t) * M
        return out

    def to_model(self) -> ModelScenario:
        dyson = FactorizedDysonMap(self.factors)
        if self.mode == "top_down":
            hamiltonian = self.term_sum
            generator = None
        else:
            generator = self.term_sum
            hamiltonian = bottom_up_hamiltonian(dyson, generator)
        # observables are fixed Hermitian-picture operators a = Omega_[k] A_k Omega_[k]^-1 at t_start
        fam = picture_family(dyson, None, self.grid.t_start)
        observables = {
            name: fam.partials[k] @ M @ fam.partial_inverses[k] for name, (M, k) in self.observables.items()
        }
        return ModelScenario(
            name=self.name,
            dyson=dyson,
            hamiltonian=hamiltonian,
            mode=self.mode,
            initial_state=self.initial_state,
            initial_picture=self.initial_state_picture,
            grid=self.grid,
            picture=self.picture,
            observables=observables,
            generator=generator,
            symbolic_factors=self.symbolic,
            ensemble=self.ensemble,
        )


def parse_scenario_text(raw: str, path: Path | None = None) -> ScenarioFile:
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg}", line=exc.lineno, token=raw[exc.pos : exc.pos + 1] or "<end>") from exc
    if not isinstance(doc, dict):
        raise ValidationError("<root>", "scenario must be a JSON object")

    version = _require(doc, "schema_version", "")
    if version != SCHEMA_VERSION:
        raise ValidationError("schema_version", f"unsupported version {version!r} (expected {SCHEMA_VERSION})")
    d = _require(doc, "dimension", "")
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ValidationError("dimension", "must be a positive integer")

    raw_factors = _require(doc, "factors", "")
    if not isinstance(raw_factors, list) or not raw_factors:
        raise ValidationError("factors", "need a non-empty list (Omega_1 first)")
    factors, symbolic = [], []
    for i, f in enumerate(raw_factors):
        where = f"factors[{i}]"
        if not isinstance(f, dict):
            raise ValidationError(where, "must be an object")
        label = str(f.get("label", f"omega{i + 1}"))
        K, poly = matrix_from_spec(_require(f, "generator", where), d, f"{where}.generator")
        coeff = _coefficient(_require(f, "coefficient", where), raw, f"{where}.coefficient")
        factors.append(SeparableFactor(label, K, coeff))
        if symbolic is not None and poly is not None and len(poly.terms) == 1:
            (a, b), = poly.terms
            if a == 0 or b == 0:
                symbolic.append(SymbolicFactor(label, poly))
                continue
        symbolic = None
    N = len(factors)

    ham = _require(doc, "hamiltonian", "")
    mode = _require(ham, "mode", "hamiltonian")
    if mode not in ("top_down", "bottom_up"):
        raise ValidationError("hamiltonian.mode", "must be 'top_down' or 'bottom_up'")
    terms = []
    for i, term in enumerate(_require(ham, "terms", "hamiltonian")):
        where = f"hamiltonian.terms[{i}]"
        coeff = _coefficient(_require(term, "coefficient", where), raw, f"{where}.coefficient")
        M, _ = matrix_from_spec(_require(term, "matrix", where), d, f"{where}.matrix")
        terms.append((coeff, M))
    if not terms:
        raise ValidationError("hamiltonian.terms", "need at least one term")

    picture = doc.get("picture", 0)
    if not isinstance(picture, int) or isinstance(picture, bool) or not 0 <= picture <= N:
        raise ValidationError("picture", f"must be an integer in [0, {N}], got {picture!r}")

    tdoc = _require(doc, "time", "")
    try:
        grid = TimeGrid(
            float(_require(tdoc, "start", "time")),
            float(_require(tdoc, "end", "time")),
            float(_require(tdoc, "step", "time")),
            tdoc.get("method", "rk4"),
            float(tdoc.get("rel_tol", 1e-10)),
            float(tdoc.get("abs_tol", 1e-12)),
        )
    except (TypeError, ValueError) as exc:
        raise ValidationError("time", str(exc)) from exc

    psi = _vector(_require(doc, "initial_state", ""), d, "initial_state")
    psi_picture = doc.get("initial_state_picture", picture)
    if not isinstance(psi_picture, int) or not 0 <= psi_picture <= N:
        raise ValidationError("initial_state_picture", f"must be an integer in [0, {N}]")

    ensemble = None
    if doc.get("ensemble") is not None:
        edoc = doc["ensemble"]
        states = [_vector(s, d, f"ensemble.states[{i}]") for i, s in enumerate(_require(edoc, "states", "ensemble"))]
        weights = _require(edoc, "weights", "ensemble")
        if len(weights) != len(states) or not states:
            raise ValidationError("ensemble.weights", "need one weight per state")
        if any((not isinstance(w, (int, float))) or w <= 0 for w in weights):
            raise ValidationError("ensemble.weights", "weights must be positive numbers")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise ValidationError("ensemble.weights", f"weights sum to {sum(weights)!r}, not 1")
        ensemble = {"states": states, "weights": [float(w) for w in weights]}

    observables = {}
    for i, obs in enumerate(doc.get("observables", [])):
        where = f"observables[{i}]"
        name = str(_require(obs, "name", where))
        if name in observables:
            raise ValidationError(f"{where}.name", f"duplicate observable {name!r}")
        M, _ = matrix_from_spec(_require(obs, "matrix", where), d, f"{where}.matrix")
        k = obs.get("defined_in_picture", N)
        if not isinstance(k, int) or not 0 <= k <= N:
            raise ValidationError(f"{where}.defined_in_picture", f"must be an integer in [0, {N}]")
        observables[name] = (M, k)

    outputs = doc.get("outputs", {}) or {}
    if not isinstance(outputs, dict) or set(outputs) - {"csv", "report"}:
        raise ValidationError("outputs", "allowed keys are 'csv' and 'report'")

    name = doc.get("name") or (path.stem if path else "scenario")
    return ScenarioFile(
        path, version, d, factors, symbolic or None, mode, terms, picture, grid,
        psi, psi_picture, ensemble, observables, outputs, str(name),
    )


def parse_scenario(path) -> ScenarioFile:
    path = Path(path)
    raw = path.read_text(encoding="utf-8")
    return parse_scenario_text(raw, path)


def load_scenario(name_or_path, **builtin_kwargs) -> ModelScenario:
    """Builtin scenario by name (``two-level``, ``fring-tenney``) or a JSON file."""
    if name_or_path in BUILTINS:
        return BUILTINS[name_or_path](**builtin_kwargs)
    return parse_scenario(name_or_path).to_model()


# --- CSV -----------------------------------------------------------------------


def fmt(x: float) -> str:
    """Shortest text that round-trips to the same double (at most 17 digits)."""
    return repr(float(x))


def emit_csv(result: EvolutionResult, path, scalars: dict | None = None, diagnostics: dict | None = None):
    """``t``, then ``<name>_re, <name>_im`` per tracked scalar, then diagnostic columns."""
    if len(result.times) == 0:
        raise ValueError("cannot write an empty result")
    scalars = result.scalars if scalars is None else scalars
    diagnostics = result.diagnostics if diagnostics is None else diagnostics
    header = ["t"]
    for name in scalars:
        header += [f"{name}_re", f"{name}_im"]
    header += list(diagnostics)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for k, t in enumerate(result.times):
        row = [fmt(t)]
        for vals in scalars.values():
            v = complex(vals[k])
            row += [fmt(v.real), fmt(v.imag)]
        row += [fmt(diagnostics[name][k]) for name in diagnostics]
        writer.writerow(row)
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in row] for row in rows[1:]])
