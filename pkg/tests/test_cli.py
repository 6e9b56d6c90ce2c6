import json
from fractions import Fraction

import numpy as np
import pytest

from proxgn import cli


def run_cli(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr().out
    return code, out


class TestSolveCommand:
    def test_json_schema_and_aggregate(self, capsys):
        code, out = run_cli(["solve", "--case", "rosenbrock", "--starts", "20",
                             "--seed", "7", "--format", "json"], capsys)
        assert code == 0
        report = json.loads(out)
        assert set(report) == {"meta", "starts", "aggregate"}
        assert set(report["meta"]) == {"case", "seed", "tolerances"}
        assert report["meta"]["case"] == "rosenbrock"
        assert report["meta"]["seed"] == 7
        assert set(report["meta"]["tolerances"]) == {"outer", "inner", "rank"}
        assert len(report["starts"]) == 20
        for start in report["starts"]:
            assert set(start) == {"x0", "status", "final_x", "iterations"}
            assert start["status"] == "converged"
            assert abs(start["final_x"][0] - 0.89475) <= 1e-4
            assert abs(start["final_x"][1] - 0.80000) <= 1e-4
        agg = report["aggregate"]
        assert set(agg) == {"converged", "avg_outer_iterations", "max_condition"}
        assert agg["converged"] == 20
        avg = Fraction(agg["avg_outer_iterations"])
        assert 3 <= avg <= 14  # printed column says 7
        assert agg["max_condition"] > 1.0

    def test_json_determinism(self, tmp_path):
        out1 = tmp_path / "a.json"
        out2 = tmp_path / "b.json"
        args = ["solve", "--case", "rosenbrock", "--starts", "5", "--seed", "3",
                "--format", "json", "--trace"]
        assert cli.main(args + ["--output", str(out1)]) == 0
        assert cli.main(args + ["--output", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_fixed_point_start_converges_fast(self, capsys):
        # the 5-digit reference sits ~6e-6 from the exact fixed point, so one
        # correction step precedes the terminal sub-tolerance steps
        code, out = run_cli(["solve", "--case", "rosenbrock",
                             "--x0", "0.89475,0.8", "--format", "json"], capsys)
        assert code == 0
        report = json.loads(out)
        assert report["starts"][0]["iterations"] <= 3

    def test_csv_trace(self, capsys):
        code, out = run_cli(["solve", "--case", "kowalik", "--starts", "1",
                             "--seed", "1", "--format", "csv"], capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "n,step_norm,residual_norm,inner_iterations,jacobian_condition"
        assert len(lines) >= 3
        first = lines[1].split(",")
        assert len(first) == 5
        assert int(first[0]) == 1
        float(first[1]), float(first[2]), float(first[4])

    def test_human_format(self, capsys):
        code, out = run_cli(["solve", "--case", "rosenbrock", "--starts", "2",
                             "--seed", "0"], capsys)
        assert code == 0
        assert "aggregate: converged 2/2" in out

    def test_zero_penalty_flag(self, capsys):
        # --x0=... form: a leading minus would otherwise read as a flag
        code, out = run_cli(["solve", "--case", "rosenbrock", "--penalty", "zero",
                             "--x0=-1.2,1.0", "--format", "json"], capsys)
        assert code == 0
        report = json.loads(out)
        # unconstrained minimizer is (1, 1)
        assert report["starts"][0]["final_x"] == pytest.approx([1.0, 1.0], abs=1e-9)

    def test_unknown_case_exit_3(self, capsys):
        assert cli.main(["solve", "--case", "nosuch"]) == 3
        assert cli.main(["solve", "--case", "twoeq6"]) == 3

    def test_bad_x0_exit_2(self, capsys):
        assert cli.main(["solve", "--case", "rosenbrock", "--x0", "a,b"]) == 2
        assert cli.main(["solve", "--case", "rosenbrock", "--x0", "1.0"]) == 2

    def test_bad_flag_exit_2(self, capsys):
        assert cli.main(["solve", "--nonsense"]) == 2

    def test_problem_file(self, tmp_path, capsys):
        source = """
import numpy as np
from proxgn import BenchmarkCase, Box, CaseSource, Problem

A = np.array([[2.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
B = np.array([1.0, 1.0, 1.0])

def make_case():
    problem = Problem(n=2, m=3, residual=lambda x: A @ x - B,
                      jacobian=lambda x: A, name="linear3x2")
    box = Box(np.array([-2.0, -2.0]), np.array([2.0, 2.0]))
    return BenchmarkCase(problem=problem, box=box, reference_x=None,
                         reference_avg_iterations=None,
                         source=CaseSource.STANDARD)
"""
        path = tmp_path / "user_case.py"
        path.write_text(source)
        code, out = run_cli(["solve", "--problem-file", str(path),
                             "--x0", "0.0,0.0", "--format", "json"], capsys)
        assert code == 0
        report = json.loads(out)
        assert report["starts"][0]["status"] == "converged"

    def test_config_file_and_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# benchmark run\n"
            "case = rosenbrock\n"
            "starts = 4\n"
            "seed = 11\n"
            "format = json\n"
        )
        code, out = run_cli(["solve", "--config", str(cfg)], capsys)
        assert code == 0
        assert len(json.loads(out)["starts"]) == 4
        code, out = run_cli(["solve", "--config", str(cfg), "--starts", "2"], capsys)
        assert code == 0
        assert len(json.loads(out)["starts"]) == 2

    def test_config_parse_error_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("case rosenbrock\n")
        assert cli.main(["solve", "--config", str(bad)]) == 2
        assert cli.main(["solve", "--config", str(tmp_path / "missing.cfg")]) == 2


class TestRadiusCommand:
    def parse(self, out):
        values = {}
        for line in out.splitlines():
            if " = " in line:
                key, _, val = line.partition(" = ")
                values[key.strip()] = val.strip()
        return values

    def test_worked_instance(self, capsys):
        code, out = run_cli(["radius", "--alpha", "0", "--beta", "1",
                             "--kappa", "1", "--L", "1", "--mode", "center"], capsys)
        assert code == 0
        values = self.parse(out)
        assert float(values["h"]) == 0.0
        assert values["admissible"] == "True"
        assert float(values["r_bar"]) == pytest.approx(0.27492, abs=1e-5)
        assert float(values["r_bar_closed_form"]) == pytest.approx(0.27492, abs=1e-5)
        assert values["closed_form_discrepancy"] == "False"
        assert float(values["C1(rho0=r_bar/2)"]) == 0.0
        assert float(values["C2(rho0=r_bar/2)"]) > 0.0
        lines = out.splitlines()
        header = lines.index("r,q")
        samples = [tuple(map(float, row.split(","))) for row in lines[header + 1:] if row]
        assert len(samples) == 20
        qs = [q for _, q in samples]
        assert qs[0] == 0.0
        assert all(b > a for a, b in zip(qs, qs[1:]))
        assert qs[-1] == pytest.approx(1.0, abs=1e-6)

    def test_inadmissible_exit_4(self, capsys):
        code, out = run_cli(["radius", "--alpha", "1", "--beta", "1",
                             "--kappa", "1", "--L", "1"], capsys)
        assert code == 4
        values = self.parse(out)
        assert float(values["h"]) == pytest.approx(3.4142, abs=1e-4)
        assert values["admissible"] == "False"

    def test_radius_mode_dominates(self, capsys):
        _, out_c = run_cli(["radius", "--alpha", "0.05", "--beta", "1",
                            "--kappa", "2", "--L", "1", "--mode", "center"], capsys)
        _, out_r = run_cli(["radius", "--alpha", "0.05", "--beta", "1",
                            "--kappa", "2", "--L", "1", "--mode", "radius"], capsys)
        r_center = float(self.parse(out_c)["r_bar"])
        r_radius = float(self.parse(out_r)["r_bar"])
        assert r_radius >= r_center

    def test_tabulated_average(self, capsys):
        code, out = run_cli(["radius", "--alpha", "0", "--beta", "1", "--kappa", "1",
                             "--L-table", "0:1,1:2,2:4", "--mode", "center"], capsys)
        assert code == 0
        values = self.parse(out)
        assert 0.0 < float(values["r_bar"]) < 1.0
        assert "r_bar_closed_form" not in values

    def test_missing_average_exit_2(self, capsys):
        assert cli.main(["radius", "--alpha", "0", "--beta", "1", "--kappa", "1"]) == 2


class TestValidateCommand:
    def test_clean_build_passes(self, capsys):
        code, out = run_cli(["validate"], capsys)
        assert code == 0
        assert "FAIL" not in out
        for family in ("penrose", "prox", "gamma", "radius", "jacobian", "reference"):
            assert family in out

    def test_filter(self, capsys):
        code, out = run_cli(["validate", "--filter", "prox"], capsys)
        assert code == 0
        names = [line.split()[0] for line in out.splitlines()[:-1] if line]
        assert names
        assert all(name.startswith("prox.") for name in names)

    def test_corrupted_data_fails_named_check(self, capsys, monkeypatch):
        from proxgn import data

        corrupted = data.OSBORNE2_Y.copy()
        corrupted[0] += 0.5
        monkeypatch.setattr(data, "OSBORNE2_Y", corrupted)
        code, out = run_cli(["validate", "--filter", "reference"], capsys)
        assert code == 1
        assert "reference.stationarity" in out
        assert "FAIL" in out
        assert "osborne2" in out


class TestRounding:
    def test_half_up(self):
        assert cli.round_half_up(Fraction(15, 2)) == 8
        assert cli.round_half_up(Fraction(7, 1)) == 7
        assert cli.round_half_up(Fraction(141, 20)) == 7
        assert cli.round_half_up(Fraction(13, 4)) == 3
        assert cli.round_half_up(Fraction(0)) == 0


class TestRobustness:
    def test_broken_problem_file_exit_3(self, tmp_path):
        bad = tmp_path / "broken.py"
        bad.write_text("this is not python (")
        assert cli.main(["solve", "--problem-file", str(bad)]) == 3
        empty = tmp_path / "empty.py"
        empty.write_text("x = 1\n")
        assert cli.main(["solve", "--problem-file", str(empty)]) == 3

    def test_radius_zero_l0_exit_2(self):
        assert cli.main(["radius", "--alpha", "0", "--beta", "1", "--kappa", "1",
                         "--L-table", "0:0.0,1:2"]) == 2


class TestTraceSchema:
    def test_json_trace_row_fields(self, capsys):
        code, out = run_cli(["solve", "--case", "rosenbrock", "--x0", "0.5,0.5",
                             "--format", "json", "--trace"], capsys)
        assert code == 0
        report = json.loads(out)
        rows = report["starts"][0]["trace"]
        assert rows
        for row in rows:
            assert set(row) == {"n", "step_norm", "residual_norm",
                                "inner_iterations", "jacobian_condition"}
        assert [row["n"] for row in rows] == list(range(1, len(rows) + 1))
