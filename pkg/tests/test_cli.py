import csv
import io
import json

import numpy as np
import pytest

from dupsolve.cli import CSV_HEADER, main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def read_rows(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


@pytest.fixture()
def problem_file(tmp_path):
    path = tmp_path / "ex1.json"
    path.write_text(json.dumps({
        "f": "x^2", "x0": "1", "label": "ex1",
        "exact_R": "x/(2 - x)", "exact_solution": "1/(1 - t)",
    }))
    return path


def table(stdout):
    lines = [l for l in stdout.splitlines() if not l.startswith("#")]
    head = lines[0].split("\t")
    return head, [dict(zip(head, l.split("\t"))) for l in lines[1:]]


class TestExpand:
    def test_square(self):
        code, out, _ = run("expand", "--f", "x^2", "--x0", "1", "--order", "3")
        assert code == 0
        head, rows = table(out)
        assert head == ["k", "general", "closed_form", "flag"]
        assert [float(r["general"]) for r in rows] == [1, 2, 2, 2]
        assert all(r["flag"] == "ok" for r in rows)

    def test_linear(self):
        code, out, _ = run("expand", "--f", "x", "--x0", "1", "-k", "4")
        assert code == 0
        _, rows = table(out)
        assert [float(r["general"]) for r in rows] == pytest.approx([1, 2, 1, 0, 0], abs=1e-15)

    def test_high_order_general_only(self):
        code, out, _ = run("expand", "--f", "x", "--x0", "1", "-k", "15")
        head, rows = table(out)
        assert code == 0 and head == ["k", "general"] and len(rows) == 16

    def test_closed_route_limit(self):
        code, _, err = run("expand", "--f", "x", "--x0", "1", "-k", "11", "--route", "closed")
        assert code == 2
        assert json.loads(err)["error"] == "OrderTooHigh"

    def test_degenerate(self):
        code, _, err = run("expand", "--f", "x^2 - 1", "--x0", "1", "-k", "3")
        assert code == 2
        doc = json.loads(err)
        assert doc["error"] == "DegenerateProblem"
        assert "f(x0) = 0" in doc["message"]

    def test_problem_file(self, problem_file):
        code, out, _ = run("expand", str(problem_file), "-k", "2")
        assert code == 0 and "x^2" in out


class TestSolve:
    def test_i1_replication(self, tmp_path, problem_file):
        out = tmp_path / "i1.csv"
        code, _, _ = run("solve", str(problem_file), "--interval", "-0.5", "0.5",
                         "--points", "240", "--r-source", "exact", "--out", str(out))
        assert code == 0
        head, data = read_rows(out)
        assert tuple(head) == CSV_HEADER
        assert len(data) == 240
        assert data[:, 3].max() <= 1e-7
        assert np.all(np.diff(data[:, 0]) > 0)
        meta = json.loads(out.with_name("i1.csv.meta.json").read_text())
        assert meta["method"] == "duplication" and meta["config"]["points"] == 240
        assert meta["wall_time_s"] >= 0

    def test_seventeen_digits_round_trip(self, tmp_path, problem_file):
        out = tmp_path / "r.csv"
        run("solve", str(problem_file), "--interval", "0", "0.3", "--points", "7", "--out", str(out))
        lines = out.read_text().splitlines()[1:]
        for line in lines:
            t, xr, xm, e = line.split(",")
            assert float(e) == abs(float(xm) - float(xr))
            assert float(repr(float(xr))) == float(xr)
        assert lines[-1].split(",")[1] == "%.17g" % (1 / (1 - 0.3))

    def test_single_point_at_origin(self, tmp_path):
        out = tmp_path / "one.csv"
        code, _, _ = run("solve", "--f", "x^2", "--x0", "1", "--interval", "0", "0",
                         "--points", "1", "--out", str(out))
        assert code == 0
        _, data = read_rows(out)
        assert data.tolist() == [[0.0, 1.0, 1.0, 0.0]]

    def test_i2_error_grows(self, tmp_path, problem_file):
        out = tmp_path / "i2.csv"
        code, _, _ = run("solve", str(problem_file), "--interval", "-0.5", "0.99",
                         "--points", "10000", "--out", str(out))
        assert code == 0
        _, data = read_rows(out)
        k = len(data) // 10
        assert data[-k:, 3].max() > data[:k, 3].max()

    def test_coupled_mode(self, tmp_path, problem_file):
        out = tmp_path / "c.csv"
        code, _, _ = run("solve", str(problem_file), "--interval", "-0.5", "0.5", "--n", "6",
                         "--out", str(out))
        assert code == 0
        assert len(read_rows(out)[1]) == 65

    @pytest.mark.parametrize("method", ["rk4", "dp45"])
    def test_classical_methods(self, tmp_path, problem_file, method):
        out = tmp_path / f"{method}.csv"
        code, _, _ = run("solve", str(problem_file), "--interval", "-0.5", "0.5",
                         "--points", "21", "--method", method, "--out", str(out))
        assert code == 0
        assert read_rows(out)[1][:, 3].max() <= 1e-8

    def test_dp45_reference_without_closed_form(self, tmp_path):
        out = tmp_path / "exp.csv"
        code, _, _ = run("solve", "--f", "x", "--x0", "1", "--interval", "-1", "1",
                         "--points", "11", "--out", str(out))
        assert code == 0
        _, data = read_rows(out)
        assert np.allclose(data[:, 1], np.exp(data[:, 0]), rtol=1e-11)
        assert data[:, 3].max() <= 1e-11
        assert json.loads(out.with_name("exp.csv.meta.json").read_text())["reference"] == "dp45"

    def test_threads_do_not_change_output(self, tmp_path, problem_file):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path, threads in ((a, "1"), (b, "4")):
            run("solve", str(problem_file), "--interval", "-0.5", "0.9", "--points", "333",
                "--threads", threads, "--out", str(path))
        assert a.read_text() == b.read_text()


class TestExitCodes:
    def test_config_error(self, tmp_path):
        code, _, err = run("solve", "--f", "x^2", "--x0", "1", "--interval", "0", "1", "--n", "1",
                           "--out", str(tmp_path / "x.csv"))
        assert code == 2
        assert json.loads(err)["error"] == "SeedOutsideV0"

    def test_syntax_error(self):
        code, _, err = run("expand", "--f", "x^^2", "--x0", "1", "-k", "2")
        assert code == 2
        assert "offset" in json.loads(err)

    def test_unknown_argument(self):
        code, _, err = run("solve", "--bogus")
        assert code == 2 and json.loads(err)["exit_code"] == 2

    def test_numeric_error(self, tmp_path):
        # sqrt(x - 1.3) is undefined for the first iterate x(0.075) ~ 1.08
        path = tmp_path / "p.json"
        path.write_text(json.dumps({"f": "x^2", "x0": 1, "exact_R": "sqrt(x - 1.3)"}))
        code, _, err = run("solve", str(path), "--interval", "0", "0.6", "--points", "3",
                           "--r-source", "exact", "--out", str(tmp_path / "x.csv"))
        assert code == 3
        doc = json.loads(err)
        assert doc["error"] == "IterationError"
        assert doc["t"] == pytest.approx(0.3)  # first node that needs R
        assert doc["iteration"] == 1

    def test_io_error(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        code, _, err = run("solve", "--f", "x", "--x0", "1", "--interval", "0", "0.1",
                           "--points", "2", "--out", str(blocker / "x.csv"))
        assert code == 4
        assert json.loads(err)["exit_code"] == 4

    def test_missing_problem_file(self):
        code, _, _ = run("expand", "/nonexistent/problem.json", "-k", "2")
        assert code == 4


class TestCheck:
    @pytest.mark.parametrize("R, x0", [("x*y", "1"), ("x+y", "0")])
    def test_passes(self, R, x0):
        code, out, _ = run("check", R, "--x0", x0, "--grid=-1:2:7")
        assert code == 0
        assert json.loads(out)["passed"] is True

    def test_planted_defect_names_condition_i(self):
        code, out, _ = run("check", "x*y + 0.001*x^2", "--x0", "1")
        report = json.loads(out)
        assert code == 0 and report["passed"] is False
        failed = [c for c in report["conditions"] if not c["passed"]]
        assert "i" in [c["label"] for c in failed]

    def test_json_file_and_sufficient(self, tmp_path):
        path = tmp_path / "R.json"
        path.write_text(json.dumps({"R": "x*y", "x0": 1}))
        out = tmp_path / "report.json"
        code, _, _ = run("check", str(path), "--t-grid", "0:0.5:6", "--out", str(out))
        names = [c["name"] for c in json.loads(out.read_text())["conditions"]]
        assert code == 0
        assert {"end_to_end", "sufficient_iii", "associativity"} <= set(names)

    def test_needs_x0(self):
        assert run("check", "x*y")[0] == 2

    def test_bad_grid(self):
        assert run("check", "x*y", "--x0", "1", "--grid", "0:1")[0] == 2


class TestBench:
    def test_convergence_summary(self, tmp_path):
        code, _, _ = run("bench", "convergence", "--out", str(tmp_path))
        assert code == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["suite"] == "convergence"
        for case in summary["cases"]:
            assert set(case) >= {"name", "max_error", "wall_time_s", "config"}
            assert (tmp_path / f"{case['name']}.csv").exists()
        assert 1.7 <= summary["derived"]["fitted_order"] <= 2.3

    def test_example1_cases(self, tmp_path):
        assert run("bench", "example1", "--out", str(tmp_path))[0] == 0
        cases = {c["name"]: c for c in json.loads((tmp_path / "summary.json").read_text())["cases"]}
        assert cases["I1_exact_R"]["max_error"] <= 1e-7
        assert set(cases) == {f"{i}_{k}" for i in ("I1", "I2") for k in ("exact_R", "taylor_R20", "dp45")}

    def test_failures_are_isolated(self, tmp_path):
        # every Taylor-R case of example 2 overflows; the suite still completes
        assert run("bench", "taylor-order", "--out", str(tmp_path))[0] == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert len(summary["cases"]) == 4
        assert all("error" in c for c in summary["cases"] if c["max_error"] is None)

    def test_deterministic_across_threads(self, tmp_path, monkeypatch):
        a, b = tmp_path / "a", tmp_path / "b"
        run("bench", "example2", "--out", str(a), "--threads", "1")
        monkeypatch.setenv("DUPSOLVE_THREADS", "3")
        run("bench", "example2", "--out", str(b))
        for name in ("half_period_exact_R.csv", "half_period_dp45.csv"):
            assert (a / name).read_text() == (b / name).read_text()

    def test_unknown_suite(self, tmp_path):
        assert run("bench", "nope", "--out", str(tmp_path))[0] == 2

    def test_bad_thread_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DUPSOLVE_THREADS", "many")
        assert run("bench", "example2", "--out", str(tmp_path))[0] == 2
