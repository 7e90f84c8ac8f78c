import io
import json
import math
import subprocess
import sys

import pytest

from polygauss import cli
from polygauss.instances import orthant, orthant_probability, problem, square_probability
from polygauss.oracle import OracleEstimate

SQUARE = {"a": [[1, -1, 0, 0], [0, 0, 1, -1]], "b": [0, 1, 0, 1]}
CORNER = {"a": [[1, -1, 0], [0, 0, 1]], "b": [0, 1, 0]}
SQUARE5 = {"a": [[1, -1, 0, 0, 1], [0, 0, 1, -1, 1]], "b": [0, 1, 0, 1, 0]}
TRIANGLE = {"a": [[1, 0, -1], [0, 1, -1]], "b": [0, 0, 1]}


def orthant_file(rho):
    return {"a": [[1, 0], [0, 1]], "b": [0, 0], "covariance": [[1, rho], [rho, 1]]}


def orthant_normals_file(rho):
    """Same orthant, correlation carried by the constraint normals."""
    return {"a": [[1, rho], [0, math.sqrt(1 - rho * rho)]], "b": [0, 0]}


@pytest.fixture
def call(tmp_path):
    def run(command, data, *flags):
        path = tmp_path / "problem.json"
        path.write_text(data if isinstance(data, str) else json.dumps(data))
        code, report, _ = cli.run([command, str(path), *flags])
        return code, report
    return run


class TestCheck:
    def test_square(self, call):
        code, rep = call("check", SQUARE)
        assert code == 0
        assert rep["general_position"] and rep["rank"] == 9 and rep["n_faces"] == 9
        assert rep["faces"] == [[], [1], [2], [3], [4], [1, 3], [1, 4], [2, 3], [2, 4]]
        assert list(rep)[:6] == ["general_position", "witness", "removed_redundant", "n_faces", "rank", "faces"]

    def test_corner(self, call):
        code, rep = call("check", CORNER)
        assert code == 0 and rep["general_position"] is False and rep["witness"] == [0]

    def test_redundant_row(self, call):
        code, rep = call("check", SQUARE5)
        assert rep["family_general_position"] is False
        assert rep["general_position"] is True and rep["removed_redundant"] == [5]
        assert rep["rank"] == 9

    def test_faces_use_input_labels(self, call):
        data = {"a": [[1, 1, -1, 0, 0], [0, 1, 0, 1, -1]], "b": [0, 0, 1, 0, 1]}
        code, rep = call("faces", data)
        assert code == 0 and [2] not in rep["faces"] and [5] in rep["faces"]


class TestProb:
    def test_square(self, call):
        code, rep = call("prob", SQUARE)
        assert code == 0
        assert rep["probability"] == pytest.approx(square_probability(), abs=1e-6)
        assert list(rep)[:4] == ["probability", "rank", "doubling_gap", "singular_distance"]

    def test_orthant(self, call):
        assert call("prob", orthant_file(0.5))[1]["probability"] == pytest.approx(1 / 3, abs=1e-6)

    def test_half_space(self, call):
        assert call("prob", {"a": [[1], [0]], "b": [0]})[1]["probability"] == pytest.approx(0.5, abs=1e-9)

    def test_oracle(self, call):
        code, rep = call("prob", orthant_file(-0.5), "--oracle", "--samples", "200000", "--seed", "3")
        assert code == 0
        assert rep["abs_diff"] == pytest.approx(abs(rep["probability"] - rep["mc_value"]))

    def test_oracle_mismatch(self, call, monkeypatch):
        monkeypatch.setattr(cli, "estimate_phi", lambda *a: OracleEstimate(0.9, 1e-4, 1000))
        code, rep = call("prob", SQUARE, "--oracle")
        assert code == cli.EXIT_ORACLE and rep["mc_value"] == 0.9

    def test_config_passed_through(self, call):
        data = dict(SQUARE, config={"shift_t": 20.0})
        assert call("prob", data)[1]["shift_t"] == 20.0


class TestSelftest:
    @pytest.mark.parametrize("data", [SQUARE, TRIANGLE, orthant_file(0.9)])
    def test_passes(self, call, data):
        code, rep = call("selftest", data)
        assert code == 0 and rep["passed"]
        assert rep["integrability_residual"] <= 1e-6
        assert rep["identity_residual"] <= 1e-10 and rep["decomposition_residual"] <= 1e-10

    def test_singular(self, call):
        code, rep = call("selftest", orthant_normals_file(1 - 1e-12))
        assert code == cli.EXIT_NUMERIC and rep["error"] == "SingularGram" and rep["face"] == [1, 2]


class TestExitCodes:
    @pytest.mark.parametrize("text", [
        "{not json",
        "[1, 2]",
        json.dumps({"a": [[1, 0]]}),
        json.dumps({"a": [[1, 0]], "b": [0]}),
        json.dumps({"a": [[1]], "b": ["x"]}),
        json.dumps(dict(orthant_file(0.5), covariance=[[1, 0.5], [0.4, 1]])),
        json.dumps(dict(SQUARE, config={"tolerance": 1})),
        json.dumps(dict(SQUARE, extra=1)),
    ])
    def test_parse(self, call, text):
        code, rep = call("prob", text)
        assert code == cli.EXIT_PARSE and rep["error"] == "ProblemFileError"

    def test_missing_file(self, tmp_path):
        assert cli.run(["check", str(tmp_path / "nope.json")])[0] == cli.EXIT_PARSE

    def test_empty(self, call):
        assert call("check", {"a": [[1, -1]], "b": [-1, 0]})[0] == cli.EXIT_EMPTY
        assert call("prob", {"a": [[1, -1]], "b": [-1, 0]})[0] == cli.EXIT_EMPTY

    def test_not_general_position(self, call):
        code, rep = call("prob", CORNER)
        assert code == cli.EXIT_EMPTY and rep["witness"] == [0]

    def test_numerical(self, call):
        code, rep = call("prob", orthant_file(1.0))
        assert code == cli.EXIT_NUMERIC and rep["error"] == "NonPositiveDefinite"


class TestOutput:
    def test_float_format(self):
        text = cli.dumps({"x": 0.1, "y": 1.0, "z": [2, True, None], "w": math.inf, "v": 1 / 3})
        assert text == '{"x": 0.10000000000000001, "y": 1.0, "z": [2, true, null], "w": null, "v": 0.33333333333333331}\n'
        assert json.loads(text)["v"] == 1 / 3

    def test_byte_identical(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text(json.dumps(TRIANGLE))
        runs = []
        for i in range(2):
            out = tmp_path / f"out{i}.json"
            assert cli.main(["-o", str(out), "prob", str(path), "--oracle", "--samples", "100000"]) == 0
            runs.append(out.read_bytes())
        assert runs[0] == runs[1]

    def test_stdin_stdout(self, monkeypatch, capsys):
        monkeypatch.setattr(sys, "stdin", io.StringIO(json.dumps(SQUARE)))
        assert cli.main(["faces", "-"]) == 0
        assert json.loads(capsys.readouterr().out)["rank"] == 9

    def test_bench(self):
        code, rep, _ = cli.run(["bench"])
        assert code == 0
        names = [r["name"] for r in rep["instances"]]
        assert "unit_square" in names
        row = rep["instances"][names.index("orthant_rho_0.5")]
        assert row["probability"] == pytest.approx(orthant_probability(0.5), abs=1e-6)

    def test_console_script(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text(json.dumps(problem(orthant())))
        out = subprocess.run([sys.executable, "-m", "polygauss.cli", "prob", str(path)],
                             capture_output=True, text=True, check=False)
        assert out.returncode == 0
        assert json.loads(out.stdout)["probability"] == pytest.approx(0.25, abs=1e-9)
