import json
from pathlib import Path

import numpy as np
import pytest

from corforge.errors import ParseError, ValidationError
from corforge.evolution import EvolutionResult
from corforge.scenario import emit_csv, load_scenario, matrix_from_spec, parse_scenario, parse_scenario_text, read_csv

SCENARIOS = Path(__file__).resolve().parents[1] / "src" / "corforge" / "scenarios"


def base():
    return json.loads((SCENARIOS / "two_level.json").read_text())


def test_golden_scenarios_parse():
    for path in sorted(SCENARIOS.glob("*.json")):
        model = parse_scenario(path).to_model()
        assert model.N >= 1


def test_file_matches_builtin():
    from_file = load_scenario(SCENARIOS / "two_level.json")
    builtin = load_scenario("two-level")
    for t in (0.0, 0.6):
        assert np.allclose(from_file.dyson.omega(t), builtin.dyson.omega(t))
        assert np.allclose(from_file.hamiltonian(t), builtin.hamiltonian(t))
    assert np.allclose(from_file.initial_state, builtin.initial_state)


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda d: d.update(schema_version=2), "schema_version"),
        (lambda d: d.update(dimension=0), "dimension"),
        (lambda d: d.update(picture=5), "picture"),
        (lambda d: d["time"].update(step=-1), "time"),
        (lambda d: d.pop("factors"), "factors"),
    ],
)
def test_validation_errors_name_field(mutate, field):
    doc = base()
    mutate(doc)
    with pytest.raises(ValidationError) as info:
        parse_scenario_text(json.dumps(doc, indent=2))
    assert info.value.field == field
    assert info.value.exit_code == 1


def test_expression_error_reports_line():
    doc = base()
    doc["factors"][0]["coefficient"] = "sin("
    with pytest.raises(ParseError) as info:
        parse_scenario_text(json.dumps(doc, indent=2))
    assert info.value.line is not None


def test_malformed_json():
    with pytest.raises(ParseError) as info:
        parse_scenario_text('{\n"a": ,\n}')
    assert info.value.line == 2


def test_matrix_specs():
    M, poly = matrix_from_spec("pauli_x", 2, "m")
    assert np.allclose(M, [[0, 1], [1, 0]]) and poly is None
    M, poly = matrix_from_spec({"builtin": "x", "scale": [0.0, 2.0]}, 8, "m")
    assert poly is not None
    lit, _ = matrix_from_spec([[[1, 0], [0, 1]], [[0, -1], [2, 0]]], 2, "m")
    assert np.allclose(lit, [[1, 1j], [-1j, 2]])
    with pytest.raises(ValidationError):
        matrix_from_spec([[[1, 0]]], 2, "m")


def test_csv_round_trip(tmp_path):
    times = np.array([0.0, 0.1, 0.2])
    vals = np.array([1 / 3 + 0.1j, -2.5e-17 + 1j, np.pi])
    res = EvolutionResult(times, np.zeros((3, 2, 2)), {"drift": np.array([0.0, 1e-16, 2e-16])}, {"obs": vals})
    path = tmp_path / "out.csv"
    emit_csv(res, path, diagnostics={"drift": res.diagnostics["drift"]})
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    header, data = read_csv(path)
    assert header == ["t", "obs_re", "obs_im", "drift"]
    assert np.array_equal(data[:, 0], times)
    assert np.array_equal(data[:, 1] + 1j * data[:, 2], vals)
