"""
End-to-end tests of the command line: exit codes and the NDJSON report stream.
"""

import json

import pytest

from conftest import FIXTURES
from main import run


def fixture(name):
    return str(FIXTURES / name)


def parse_stream(text):
    """Report records grouped by their "type" field."""
    grouped = {}
    for line in text.splitlines():
        message = json.loads(line)
        grouped.setdefault(message["type"], []).append(message)
    return grouped


def invoke(capsys, *argv):
    code = run(list(argv))
    captured = capsys.readouterr()
    return code, parse_stream(captured.out) if captured.out else {}


class TestPolymerCommands:
    def test_ursell_on_the_triangle(self, capsys):
        code, records = invoke(capsys, "ursell", "--model", fixture("triangle.json"), "--no-timestamp")
        assert code == 0
        result = records["result"][0]["data"]
        assert result["ursell"] == pytest.approx(2.0)
        assert result["tree_bound"] == pytest.approx(3.0)
        assert result["bound_holds"] is True

    def test_record_order(self, capsys):
        _, records = invoke(capsys, "ursell", "--model", fixture("triangle.json"), "--config", "a,b")
        assert list(records) == ["scenario_started", "inputs", "result", "scenario_completed"]
        assert records["inputs"][0]["data"]["config"] == "a,b"
        assert records["scenario_completed"][0]["data"]["exit_code"] == 0
        assert records["result"][0]["timestamp"] is not None

    def test_partition_with_series(self, capsys):
        code, records = invoke(
            capsys, "partition", "--model", fixture("attractive_pair.json"), "--max-order", "4", "--series-order", "3"
        )
        assert code == 0
        series = [table["data"]["series"] for table in records["partial_sums"]]
        assert series == ["partition_function", "abs_log_xi", "mayer_log_xi"]

    def test_stability_violation_is_a_failed_check(self, tmp_path, capsys):
        model = tmp_path / "unstable.json"
        model.write_text(
            json.dumps(
                {
                    "polymers": [{"id": "a", "activity": 0.1}, {"id": "b", "activity": 0.1}],
                    "potential": [["a", "b", -1.0]],
                }
            )
        )
        code, records = invoke(capsys, "stability-check", "--model", str(model), "--max-size", "2")
        assert code == 1
        assert records["result"][0]["data"]["passed"] is False

    def test_verify_identity(self, capsys):
        code, records = invoke(capsys, "verify-identity", "--n", "3", "--trials", "5", "--seed", "3")
        assert code == 0
        assert records["constants"][0]["data"]["seed"] == 3


class TestCriterionCommands:
    def test_failing_weights(self, capsys):
        code, records = invoke(
            capsys, "check-criterion", "--model", fixture("triangle.json"), "--mu", fixture("triangle_mu.json")
        )
        assert code == 1
        assert records["result"][0]["data"]["passed"] is False

    def test_passing_weights_with_certification(self, capsys):
        code, records = invoke(
            capsys,
            "check-criterion",
            "--model",
            fixture("single.json"),
            "--mu",
            fixture("single_mu.json"),
            "--pinned",
            "g",
            "--max-order",
            "4",
        )
        assert code == 0
        tables = [record["data"] for record in records["partial_sums"]]
        assert [table["series"] for table in tables] == ["pinned_sum", "tree_recursion"]
        assert len(tables[0]["partial_sums"]) == 5
        assert records["result"][0]["data"]["certified_consistent"] is True

    def test_hard_core_report(self, capsys):
        code, records = invoke(
            capsys, "check-criterion", "--model", fixture("triangle.json"), "--optimize-mu", "--hard-core"
        )
        result = records["result"][0]["data"]
        assert "hard_core_passed" in result
        assert code == (0 if result["passed"] else 1)

    def test_weights_are_required(self, capsys):
        assert run(["check-criterion", "--model", fixture("single.json")]) == 2

    def test_optimize_writes_weights(self, tmp_path, capsys):
        target = tmp_path / "mu.json"
        code, records = invoke(
            capsys, "optimize-mu", "--model", fixture("single.json"), "--write-mu", str(target)
        )
        assert code == 0
        assert records["result"][0]["data"]["status"] == "certificate found"
        assert json.loads(target.read_text())["mu"]["g"] > 0.0


class TestBegCommands:
    def test_thresholds(self, capsys):
        code, records = invoke(capsys, "beg-beta0", "--params", fixture("beg_d2.json"), "--mode", "closed_form")
        assert code == 0
        assert records["constants"][0]["data"]["J2"] == pytest.approx(5.159472534786, abs=1e-9)
        assert records["result"][0]["data"]["beta0"]["closed_form"]["beta0"] == pytest.approx(6.987412795255, abs=1e-9)

    def test_bijection(self, capsys):
        code, records = invoke(capsys, "bijection-check", "--params", fixture("beg_small.json"))
        assert code == 0
        assert records["partial_sums"][0]["data"]["series"] == "polymer_gas_partition"

    def test_bijection_window_override(self, capsys):
        code, records = invoke(capsys, "bijection-check", "--params", fixture("beg_small.json"), "--window", "3,1")
        assert code == 0
        assert records["result"][0]["data"]["sites"] == 3


class TestErrors:
    def test_broken_model(self, capsys):
        code, records = invoke(capsys, "ursell", "--model", fixture("broken.json"))
        assert code == 2
        error = records["error"][0]
        assert error["details"]["line"] == 4
        assert "result" not in records
        assert records["scenario_completed"][0]["data"]["exit_code"] == 2

    def test_unknown_polymer_id(self, capsys):
        code, records = invoke(capsys, "ursell", "--model", fixture("triangle.json"), "--config", "a,z")
        assert code == 2
        assert "error" in records

    def test_unknown_subcommand(self, capsys):
        assert run(["integrate"]) == 2

    def test_help(self, capsys):
        assert run(["--help"]) == 0


class TestOutput:
    def test_reports_are_reproducible(self, capsys):
        argv = ["ursell", "--model", fixture("attractive_pair.json"), "--no-timestamp"]
        run(argv)
        first = capsys.readouterr().out
        run(argv)
        second = capsys.readouterr().out
        assert first == second
        assert all(json.loads(line)["timestamp"] is None for line in first.splitlines())

    def test_output_file(self, tmp_path, capsys):
        target = tmp_path / "reports" / "ursell.ndjson"
        code = run(["ursell", "--model", fixture("triangle.json"), "--output", str(target)])
        assert code == 0
        assert capsys.readouterr().out == ""
        assert "result" in parse_stream(target.read_text())
