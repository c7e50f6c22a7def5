import csv
import io
import json
import math
import subprocess
import sys

import pytest

from convex_bounds.cli import run
from convex_bounds.report import CSV_HEADER, ReportRow, fmt, worst_exit
from convex_bounds.suite import IDS, run_check, verify_suite

E = math.e


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def rows_of(text):
    return json.loads(text)["rows"]


class TestBound:
    def test_integral(self):
        code, out, _ = call("bound", "integral", "-f", "x^2", "-a", "0", "-b", "1", "--format", "json")
        assert code == 0
        (row,) = rows_of(out)
        assert row["inequality_id"] == "HH" and row["status"] == "pass"
        assert float(row["lower"]) == 0.25 and float(row["upper"]) == 0.5
        assert float(row["value"]) == pytest.approx(1 / 3, abs=1e-12)

    def test_integral_text(self):
        code, out, _ = call("bound", "integral", "-f", "x^2", "-a", "0", "-b", "1")
        assert code == 0
        assert "HH" in out and "lower=0.25" in out and "pass" in out

    def test_integral_extras(self):
        code, out, _ = call(
            "bound", "integral", "-f", "x^2", "-a", "0", "-b", "1",
            "--n", "2", "--refined", "--weight", "x*(1-x)", "--target-gap", "1e-3", "--format", "json",
        )
        assert code == 0
        rows = rows_of(out)
        assert [r["inequality_id"] for r in rows] == ["HH", "2.2", "2.5", "fejer", "HHc"]
        assert float(rows[1]["value"]) == 0.625
        assert float(rows[2]["value"]) == pytest.approx(7 / 18, abs=1e-9)
        assert rows[3]["lower"] == "-inf"

    def test_series(self):
        code, out, _ = call("bound", "series", "-f", "exp(-x)", "--variant", "eq29", "--format", "json")
        assert code == 0
        (row,) = rows_of(out)
        assert row["inequality_id"] == "2.9"
        assert float(row["lower"]) == pytest.approx(math.sqrt(E) / (E - 1), abs=1e-9)
        assert float(row["value"]) == pytest.approx(1.0, abs=1e-9)
        assert float(row["upper"]) == pytest.approx(0.5 + 1 / (E - 1), abs=1e-9)
        assert row["b"] == "inf"

    def test_series_eq210_id(self):
        _, out, _ = call("bound", "series", "-f", "exp(-x)", "--variant", "eq210", "--format", "json")
        assert rows_of(out)[0]["inequality_id"] == "2.10"

    @pytest.mark.parametrize(
        "argv, id_",
        [
            (["bound", "moment", "-f", "exp(x)"], "5.1"),
            (["bound", "trapezoid-gap", "-f", "exp(x)"], "5.3"),
            (["bound", "mean", "-f", "exp(x)", "--variant", "endpoint"], "5.5"),
            (["bound", "mean", "-f", "exp(x)", "--variant", "midpoint"], "5.6"),
            (["bound", "half-gap", "-f", "exp(x)"], "5.7"),
            (["bound", "inflection", "-f", "x^4/4", "-a", "-1", "--auto"], "4.1"),
            (["bound", "inflection", "-f", "x^4/4", "-a", "-1", "--c", "0"], "4.1"),
        ],
    )
    def test_derivative_bounds(self, argv, id_):
        extra = [] if "-a" in argv else ["-a", "0"]
        code, out, _ = call(*argv, *extra, "-b", "1", "--format", "json")
        assert code == 0
        assert rows_of(out)[0]["inequality_id"] == id_

    def test_leading_minus_expression(self):
        code, out, _ = call("bound", "inflection", "-f", "-x^4/4", "-a", "-1", "-b", "1", "--format", "json")
        assert code == 2
        (row,) = rows_of(out)
        assert row["status"] == "precondition_failed" and row["inequality_id"] == "4.1"

    def test_logmean(self):
        code, out, _ = call("bound", "logmean", "--a", "1", "--b", "3", "--format", "json")
        assert code == 0
        row = rows_of(out)[0]
        assert float(row["lower"]) == pytest.approx(3 ** (5 / 8), abs=1e-14)
        assert (row["value"], row["upper"]) == ("2", "2.25")

    def test_hardy(self):
        code, out, _ = call("hardy", "ratio", "-f", "exp(-x)", "--alpha", "1", "--p", "2", "--format", "json")
        assert code == 0
        row = rows_of(out)[0]
        assert row["inequality_id"] == "3.1"
        assert float(row["value"]) == pytest.approx(2 * math.sqrt(math.log(2)), abs=1e-9)

    def test_product_and_ion(self):
        code, out, _ = call("product", "-f", "x", "-f", "exp(x)", "-a", "0", "-b", "1", "--format", "json")
        assert code == 0 and rows_of(out)[0]["inequality_id"] == "3.7"
        code, out, _ = call("product", "-f", "x", "-f", "x", "--ion", "3", "1.5", "-a", "0", "-b", "1", "--format", "json")
        assert code == 0
        row = rows_of(out)[0]
        assert row["inequality_id"] == "ion"
        assert float(row["upper"]) == pytest.approx(0.5, abs=1e-12)


class TestExitCodes:
    def test_precondition(self):
        code, out, _ = call("bound", "integral", "-f", "x*(2-x)", "-a", "0", "-b", "2")
        assert code == 2 and "precondition_failed" in out

    def test_negative_tolerance_is_usage(self):
        code, _, err = call("bound", "integral", "-f", "x^2", "-a", "0", "-b", "1", "--tol", "-1")
        assert code == 3 and "tol" in err

    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["bound"],
            ["bound", "integral", "-f", "x^", "-a", "0", "-b", "1"],
            ["bound", "integral", "-f", "y", "-a", "0", "-b", "1"],
            ["bound", "integral", "-f", "x^2", "-a", "1", "-b", "0"],
            ["bound", "integral", "-f", "x^2"],
            ["hardy", "ratio", "-f", "exp(-x)", "--alpha", "1", "--p", "1"],
            ["verify", "all", "--trials", "0"],
            ["bound", "logmean", "--a", "-1", "--b", "2"],
        ],
    )
    def test_usage(self, argv):
        code, _, err = call(*argv)
        assert code == 3
        assert err

    def test_divergence_is_precondition(self):
        code, _, _ = call("hardy", "ratio", "-f", "exp(-x)", "--alpha", "2", "--p", "2")
        assert code == 2

    def test_maximum_severity(self):
        rows = [
            ReportRow("HH", "x", 0, 1, 0, 1, 2, "pass"),
            ReportRow("HH", "x", 0, 1, 0, 3, 2, "fail"),
        ]
        assert worst_exit(rows) == 1
        rows.append(ReportRow.precondition("HH", "x", 0, 1, "no"))
        assert worst_exit(rows) == 2
        assert worst_exit([]) == 0

    def test_fail_status(self):
        row = ReportRow.judged("HH", "x", 0, 1, 0.0, 1.0, 1.0 - 2e-8, 1e-8)
        assert row.status == "fail" and row.exit_code == 1
        assert ReportRow.judged("HH", "x", 0, 1, 0.0, 1.0, 1.0 - 5e-9, 1e-8).status == "pass"


class TestFormats:
    def test_csv_header(self):
        code, out, _ = call("bound", "moment", "-f", "exp(x)", "-a", "0", "-b", "1", "--format", "csv")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "inequality_id,function,a,b,lower,value,upper,slack_lower,slack_upper,status"
        (row,) = list(csv.DictReader(io.StringIO(out)))
        assert tuple(row) == CSV_HEADER

    def test_json_round_trip(self):
        code, out, _ = call("bound", "mean", "-f", "exp(x)", "-a", "0", "-b", "1", "--format", "json")
        row = rows_of(out)[0]
        for key in ("a", "b", "lower", "value", "upper", "slack_lower", "slack_upper"):
            v = float(row[key])
            assert fmt(v) == row[key]
            digits = row[key].lstrip("-").split("e")[0].replace(".", "").lstrip("0")
            assert len(digits) <= 15
        assert float(row["slack_lower"]) == pytest.approx(float(row["value"]) - float(row["lower"]), abs=1e-14)

    def test_fields_use_15_digits(self):
        assert fmt(1 / 3) == "0.333333333333333"
        assert fmt(math.inf) == "inf"

    def test_env_tolerance(self, monkeypatch):
        monkeypatch.setenv("CONVEX_BOUNDS_TOL", "1e-6")
        code, out, _ = call("verify", "all", "--trials", "1", "--format", "json")
        assert code == 0
        assert json.loads(out)["summary"]["tolerance"] == 1e-6
        code, out, _ = call("verify", "all", "--trials", "1", "--format", "json", "--tol", "1e-7")
        assert json.loads(out)["summary"]["tolerance"] == 1e-7

    def test_default_tolerance(self, monkeypatch):
        monkeypatch.delenv("CONVEX_BOUNDS_TOL", raising=False)
        _, out, _ = call("verify", "all", "--trials", "1", "--format", "json")
        assert json.loads(out)["summary"]["tolerance"] == 1e-8

    @pytest.mark.parametrize("raw", ["abc", "0", "-1e-8"])
    def test_bad_env_tolerance(self, monkeypatch, raw):
        monkeypatch.setenv("CONVEX_BOUNDS_TOL", raw)
        code, _, err = call("bound", "integral", "-f", "x^2", "-a", "0", "-b", "1")
        assert code == 3 and "CONVEX_BOUNDS_TOL" in err

    def test_check_convexity(self):
        code, out, _ = call("check", "convexity", "-f", "x^2*(2-x)^2", "-a", "0", "-b", "2", "--format", "json")
        assert code == 2
        doc = json.loads(out)
        assert doc["verdict"] == "Neither" and len(doc["witness"]) == 2
        code, out, _ = call("check", "convexity", "-f", "2*x+1", "-a", "0", "-b", "1")
        assert code == 0 and out.startswith("Affine")


class TestVerify:
    def test_one_trial_covers_every_id(self):
        rows, summary = verify_suite(1, 0)
        assert [r.inequality_id for r in rows] == list(IDS)
        assert list(summary["inequalities"]) == list(IDS)
        assert all(s["trials"] == 1 for s in summary["inequalities"].values())
        assert summary["counterexample"]["verdict"] == "Neither"

    def test_cli_json(self):
        code, out, _ = call("verify", "all", "--trials", "2", "--seed", "3", "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert len(doc["rows"]) == 2 * len(IDS)
        assert doc["summary"]["violations"] == 0

    def test_cli_csv_and_text(self):
        code, out, err = call("verify", "all", "--trials", "1", "--format", "csv")
        assert code == 0
        assert out.splitlines()[0].startswith("inequality_id,")
        assert "violations: 0" in err
        code, out, _ = call("verify", "all", "--trials", "1")
        assert code == 0 and "non-convex product" in out and "Neither" in out

    def test_rows_depend_only_on_seed_and_trial(self):
        rows, _ = verify_suite(3, 11, ids=("HH", "3.6", "5.14"))
        again = [run_check(i, 11, t) for i in ("HH", "3.6", "5.14") for t in range(3)]
        assert rows == again

    def test_jobs_do_not_change_rows(self):
        one, _ = verify_suite(2, 5, jobs=1)
        two, _ = verify_suite(2, 5, jobs=2)
        assert one == two

    def test_trials_must_be_positive(self):
        with pytest.raises(ValueError):
            verify_suite(0, 0)


def test_module_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "convex_bounds", "bound", "integral", "-f", "x^2", "-a", "0", "-b", "1", "--format", "csv"],
        capture_output=True, text=True,
    )
    assert out.returncode == 0
    assert out.stdout.splitlines()[1].startswith("HH,x^2,0,1,0.25,")
