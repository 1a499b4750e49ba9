import json

import numpy as np
import pytest

from qclassical.cli import run
from qclassical.models import build_counterexample
from qclassical.serialize import process_to_json


def read_lines(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


class TestCounterexampleCommands:
    @pytest.mark.parametrize("which", [1, 2, 3])
    def test_builtin_expectations_pass(self, which, tmp_path):
        out = tmp_path / "report.jsonl"
        assert run(["counterexample", "--which", str(which), "-o", str(out)]) == 0
        lines = read_lines(out)
        expected = build_counterexample(which).expected
        got = {line["check"]: line["holds"] for line in lines}
        assert got == expected

    def test_check_model_alias(self, tmp_path):
        out = tmp_path / "report.jsonl"
        code = run(
            [
                "check",
                "--model",
                "counterexample-1",
                "--checks",
                "classical,incoherent",
                "-o",
                str(out),
            ]
        )
        assert code == 0
        got = {line["check"]: line["holds"] for line in read_lines(out)}
        assert got == {"classical": False, "incoherent": True}

    def test_separation_model(self, tmp_path):
        out = tmp_path / "report.jsonl"
        assert run(["check", "--model", "appendix-a", "-o", str(out)]) == 0
        got = {line["check"]: line["holds"] for line in read_lines(out)}
        assert got == {"ncgd": True, "incoherent": False}

    def test_pipeline_check(self, tmp_path):
        out = tmp_path / "report.jsonl"
        code = run(
            ["check", "--model", "counterexample-3", "--checks", "pipeline", "-o", str(out)]
        )
        assert code == 0
        (line,) = read_lines(out)
        assert line["check"] == "pipeline"
        assert line["holds"] is True
        assert {imp["name"] for imp in line["implications"]} >= {
            "classical_implies_incoherent",
            "markov_ncgd_implies_diagonal_incoherence",
        }


class TestDocumentInput:
    def _write_doc(self, tmp_path, mutate=None):
        ce = build_counterexample(1)
        doc = {
            "process": process_to_json(ce.process),
            "observable": 0,
            "preparations": {
                "type": "single",
                "preparation": {
                    "type": "prepare",
                    "state": [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]],
                },
            },
            "checks": ["classical", "incoherent"],
            "expected": {"classical": False, "incoherent": True},
        }
        if mutate:
            mutate(doc)
        path = tmp_path / "input.json"
        path.write_text(json.dumps(doc))
        return path

    def test_document_round_trip(self, tmp_path):
        path = self._write_doc(tmp_path)
        out = tmp_path / "report.jsonl"
        assert run(["check", "--input", str(path), "-o", str(out)]) == 0
        got = {line["check"]: line["holds"] for line in read_lines(out)}
        assert got == {"classical": False, "incoherent": True}

    def test_mismatched_expectation_exits_one(self, tmp_path):
        def mutate(doc):
            doc["expected"]["classical"] = True

        path = self._write_doc(tmp_path, mutate)
        assert run(["check", "--input", str(path)]) == 1

    def test_malformed_json_exits_two(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{"process": [,}')
        assert run(["check", "--input", str(path)]) == 2
        err = capsys.readouterr().err
        assert "line" in err and "column" in err

    def test_schema_violation_exits_two(self, tmp_path):
        def mutate(doc):
            doc["process"].pop("times")

        path = self._write_doc(tmp_path, mutate)
        assert run(["check", "--input", str(path)]) == 2

    def test_dimension_error_exits_two(self, tmp_path):
        def mutate(doc):
            doc["process"]["dim_system"] = 3

        path = self._write_doc(tmp_path, mutate)
        assert run(["check", "--input", str(path)]) == 2

    def test_missing_file_exits_two(self, tmp_path):
        assert run(["check", "--input", str(tmp_path / "absent.json")]) == 2

    def test_unknown_check_rejected(self, tmp_path):
        path = self._write_doc(tmp_path)
        assert run(["check", "--input", str(path), "--checks", "bogus"]) == 2


class TestDeterminism:
    def test_check_reports_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for out in (a, b):
            assert run(["counterexample", "--which", "1", "-o", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_fuzz_reports_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for out in (a, b):
            assert (
                run(
                    [
                        "fuzz",
                        "--seed",
                        "7",
                        "--count",
                        "40",
                        "--checks",
                        "pipeline",
                        "-o",
                        str(out),
                    ]
                )
                == 0
            )
        assert a.read_bytes() == b.read_bytes()

    def test_fuzz_thread_count_does_not_change_report(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        assert run(["fuzz", "--seed", "11", "--count", "30", "--threads", "1", "-o", str(a)]) == 0
        assert run(["fuzz", "--seed", "11", "--count", "30", "--threads", "4", "-o", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestTrajectoryCommand:
    def test_csv_and_figure(self, tmp_path):
        csv = tmp_path / "traj.csv"
        code = run(
            [
                "dephasing-model",
                "--gamma", "1", "--s", "1", "--x0", "1",
                "--t-max", "5", "--dt", "0.01",
                "-o", str(csv),
            ]
        )
        assert code == 0
        lines = csv.read_text().splitlines()
        assert lines[0] == "t,x_exact,x_ncgd"
        assert len(lines) == 502
        row = dict(zip(("t", "x_exact", "x_ncgd"), lines[301].split(",")))
        assert abs(float(row["x_exact"]) - 0.5 * (np.exp(-1) + np.exp(-3))) < 1e-12
        assert abs(float(row["x_ncgd"]) - np.exp(-3)) < 1e-12
        figure = tmp_path / "traj.png"
        assert figure.exists() and figure.stat().st_size > 1000

    def test_no_figure_flag(self, tmp_path):
        csv = tmp_path / "bare.csv"
        assert run(["dephasing-model", "-o", str(csv), "--no-figure"]) == 0
        assert csv.exists()
        assert not (tmp_path / "bare.png").exists()

    def test_bad_parameters_exit_two(self, tmp_path):
        assert (
            run(["dephasing-model", "--gamma", "-1", "-o", str(tmp_path / "x.csv")]) == 2
        )


def test_unknown_fuzz_class_rejected():
    assert run(["fuzz", "--seed", "1", "--checks", "bogus"]) == 2
