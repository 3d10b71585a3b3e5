"""End-to-end tests of the command-line front end (in-process)."""

import csv
import textwrap

import numpy as np

from nablats.cli import main
from nablats.config import ConfigError, load_config
from nablats.solver import FREE, SolveOptions, direct_solve
from nablats.timescale import integers
from nablats.variational import Problem, Trajectory, trajectory_to_csv

BASE_INI = """
[timescale]
family = integers
a = 0
b = 5

[problem]
n = 1
L = "-(v1^2)"
g = "0"
x_a = 0.0

[solve]
T_trunc = 5
terminal = pinned: 5.0
grad_tol = 1e-10

[report]
tolerance = 1e-6
trajectory_out = {dir}/trajectory.csv
horizon_out = {dir}/horizon.csv
report_out = {dir}/residuals.csv

[quad]
f = "1"
"""


def write_ini(tmp_path, body=BASE_INI, name="run.ini"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(body).format(dir=tmp_path))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def base_problem():
    return Problem.from_strings(integers(0, 5), 1, "-(v1^2)", "0", [0.0])


def write_trajectory(tmp_path, name, values):
    p = base_problem()
    traj = Trajectory.from_values(p, np.asarray(values, dtype=float).reshape(-1, 1))
    path = tmp_path / name
    trajectory_to_csv(traj, path)
    return str(path)


class TestQuad:
    def test_unit_integrand_over_three_steps(self, tmp_path, capsys):
        cfg = write_ini(tmp_path)
        code, out, _ = run(capsys, "quad", cfg, "--from", "0", "--to", "3")
        assert code == 0
        assert out.strip() == "3.00000000000000"

    def test_equal_bounds_prints_zero(self, tmp_path, capsys):
        cfg = write_ini(tmp_path)
        code, out, _ = run(capsys, "quad", cfg, "--from", "2", "--to", "2")
        assert code == 0
        assert float(out.strip()) == 0.0

    def test_off_grid_bound_exits_2_naming_the_value(self, tmp_path, capsys):
        cfg = write_ini(tmp_path)
        code, _, err = run(capsys, "quad", cfg, "--from", "0", "--to", "0.5")
        assert code == 2
        assert "0.5" in err

    def test_non_finite_integrand_exits_3(self, tmp_path, capsys):
        cfg = write_ini(tmp_path, BASE_INI.replace('f = "1"', 'f = "log(t)"'))
        code, _, err = run(capsys, "quad", cfg, "--from", "0", "--to", "3")
        assert code == 3
        assert "error" in err


class TestCheckEl:
    def test_linear_trajectory_passes(self, tmp_path, capsys):
        cfg = write_ini(tmp_path)
        traj = write_trajectory(tmp_path, "x.csv", [0, 1, 2, 3, 4, 5])
        code, out, _ = run(capsys, "check-el", cfg, "--trajectory", traj)
        assert code == 0
        assert "status: PASS" in out

    def test_perturbation_fails_and_localizes(self, tmp_path, capsys):
        cfg = write_ini(tmp_path)
        clean = write_trajectory(tmp_path, "clean.csv", [0, 1, 2, 3, 4, 5])
        bumped = write_trajectory(tmp_path, "bumped.csv", [0, 1, 3, 3, 4, 5])

        def pointwise_rows():
            with open(tmp_path / "residuals.csv", newline="") as fh:
                return {
                    float(row["t"]): float(row["value"])
                    for row in csv.DictReader(fh)
                    if row["kind"] == "el_pointwise"
                }

        code, _, _ = run(capsys, "check-el", cfg, "--trajectory", clean)
        assert code == 0
        clean_rows = pointwise_rows()

        code, out, _ = run(capsys, "check-el", cfg, "--trajectory", bumped)
        assert code == 1
        assert "status: FAIL" in out
        bumped_rows = pointwise_rows()

        # residual at t uses x(t-2h)..x(t); bumping x(2) touches t in {2,3,4}
        assert set(clean_rows) == set(bumped_rows)
        for t in (2.0, 3.0, 4.0):
            assert abs(bumped_rows[t] - clean_rows[t]) > 0.5
        for t in set(clean_rows) - {2.0, 3.0, 4.0}:
            assert bumped_rows[t] == clean_rows[t]

    def test_missing_trajectory_file_exits_2(self, tmp_path, capsys):
        cfg = write_ini(tmp_path)
        code, _, err = run(capsys, "check-el", cfg, "--trajectory", str(tmp_path / "nope.csv"))
        assert code == 2
        assert "Traceback" not in err

    def test_integral_and_finite_forms_pass_on_extremal(self, tmp_path, capsys):
        cfg = write_ini(tmp_path)
        traj = write_trajectory(tmp_path, "x.csv", [0, 1, 2, 3, 4, 5])
        for form in ("integral", "finite"):
            code, out, _ = run(capsys, "check-el", cfg, "--trajectory", traj, "--form", form)
            assert code == 0, form
            assert f"form: {form}" in out

    def test_off_grid_Tprime_exits_2(self, tmp_path, capsys):
        cfg = write_ini(tmp_path)
        traj = write_trajectory(tmp_path, "x.csv", [0, 1, 2, 3, 4, 5])
        code, _, err = run(capsys, "check-el", cfg, "--trajectory", traj, "--Tprime", "2.5")
        assert code == 2
        assert "2.5" in err


class TestSolve:
    def test_writes_trajectory_and_horizon_files(self, tmp_path, capsys):
        body = BASE_INI.replace("T_trunc = 5", "T_trunc = 5\ntruncations = 3, 5")
        cfg = write_ini(tmp_path, body)
        code, out, _ = run(capsys, "solve", cfg)
        assert code == 0
        assert "converged: true" in out

        with open(tmp_path / "trajectory.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "x1"]
        assert len(rows) == 7  # header + 6 grid points
        values = np.array([[float(c) for c in r] for r in rows[1:]])
        assert np.max(np.abs(values[:, 1] - values[:, 0])) <= 1e-8  # x = t

        with open(tmp_path / "horizon.csv", newline="") as fh:
            hrows = list(csv.DictReader(fh))
        assert list(hrows[0]) == [
            "T_trunc", "max_el_residual", "trans_T1", "trans_T2",
            "objective", "trans_applicable",
        ]
        assert [float(r["T_trunc"]) for r in hrows] == [3.0, 5.0]
        assert all(r["trans_applicable"] == "false" for r in hrows)  # pinned terminal
        assert all(float(r["max_el_residual"]) <= 1e-8 for r in hrows)

    def test_solved_trajectory_passes_check_el(self, tmp_path, capsys):
        cfg = write_ini(tmp_path)
        code, _, _ = run(capsys, "solve", cfg)
        assert code == 0
        code, out, _ = run(
            capsys, "check-el", cfg, "--trajectory", str(tmp_path / "trajectory.csv")
        )
        assert code == 0
        assert "status: PASS" in out


class TestLemma:
    def test_zero_function_exits_4(self, tmp_path, capsys):
        cfg = write_ini(tmp_path)
        path = tmp_path / "zero.csv"
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "f"])
            for t in range(6):
                wr.writerow([float(t), 0.0])
        code, out, _ = run(capsys, "lemma", cfg, "--function", str(path))
        assert code == 4
        assert "zero" in out

    def test_spike_reports_case_point_and_value(self, tmp_path, capsys):
        cfg = write_ini(tmp_path)
        path = tmp_path / "spike.csv"
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "f"])
            for t in range(6):
                wr.writerow([float(t), 2.0 if t == 3 else 0.0])
        code, out, _ = run(capsys, "lemma", cfg, "--function", str(path))
        assert code == 0
        assert "case_tag: SCATTERED_SPIKE" in out
        assert "t0: 3.0" in out
        assert "witness_value: 4.00000000000000" in out

    def test_dense_bump_reports_positive_value(self, tmp_path, capsys):
        body = """
        [timescale]
        family = sampled_interval
        a = 0
        b = 1
        n = 4
        """
        cfg = write_ini(tmp_path, body)
        path = tmp_path / "ramp.csv"
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "f"])
            for t in (0.0, 0.25, 0.5, 0.75, 1.0):
                wr.writerow([t, t])
        code, out, _ = run(capsys, "lemma", cfg, "--function", str(path))
        assert code == 0
        assert "case_tag: LEFT_DENSE_BUMP" in out
        value = float(next(l.split(":")[1] for l in out.splitlines() if l.startswith("witness_value")))
        assert value > 0.0

    def test_wrong_grid_exits_2(self, tmp_path, capsys):
        cfg = write_ini(tmp_path)
        path = tmp_path / "short.csv"
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "f"])
            wr.writerow([0.0, 1.0])
        code, _, err = run(capsys, "lemma", cfg, "--function", str(path))
        assert code == 2
        assert "Traceback" not in err


class TestCompare:
    def test_identical_files_margin_zero(self, tmp_path, capsys):
        cfg = write_ini(tmp_path)
        a = write_trajectory(tmp_path, "a.csv", [0, 1, 2, 3, 4, 5])
        code, out, _ = run(capsys, "compare", cfg, "--candidate", a, "--star", a)
        assert code == 0
        assert "margin: 0.0" in out

    def test_perturbed_candidate_loses_to_optimum(self, tmp_path, capsys):
        cfg = write_ini(tmp_path)
        p = base_problem()
        star_traj = direct_solve(
            p, SolveOptions(T_trunc=5.0, terminal_mode=FREE, grad_tol=1e-12)
        )
        star = str(tmp_path / "star.csv")
        trajectory_to_csv(star_traj, star)
        worse = star_traj.values.copy()
        worse[3, 0] += 0.5
        cand = write_trajectory(tmp_path, "cand.csv", worse)
        code, out, _ = run(capsys, "compare", cfg, "--candidate", cand, "--star", star)
        assert code == 0
        margin = float(next(l.split(":")[1] for l in out.splitlines() if l.startswith("margin")))
        assert margin < 0.0

    def test_better_candidate_fails_with_positive_margin(self, tmp_path, capsys):
        cfg = write_ini(tmp_path)
        bad_star = write_trajectory(tmp_path, "star.csv", [0, 0, 0, 3, 3, 3])
        good = write_trajectory(tmp_path, "cand.csv", [0, 0.6, 1.2, 1.8, 2.4, 3.0])
        code, out, _ = run(capsys, "compare", cfg, "--candidate", good, "--star", bad_star)
        assert code == 1
        margin = float(next(l.split(":")[1] for l in out.splitlines() if l.startswith("margin")))
        assert margin > 0.0
        assert "status: FAIL" in out


class TestMalformedInput:
    def test_missing_config_file(self, tmp_path, capsys):
        code, _, err = run(capsys, "quad", str(tmp_path / "none.ini"), "--from", "0", "--to", "1")
        assert code == 2
        assert "Traceback" not in err

    def test_missing_timescale_section(self, tmp_path, capsys):
        cfg = write_ini(tmp_path, "[problem]\nn = 1\nL = \"0\"\nx_a = 0\n")
        code, _, err = run(capsys, "solve", cfg)
        assert code == 2
        assert "timescale" in err

    def test_bad_expression(self, tmp_path, capsys):
        cfg = write_ini(tmp_path, BASE_INI.replace('L = "-(v1^2)"', 'L = "-(v1^2"'))
        code, _, err = run(capsys, "solve", cfg)
        assert code == 2
        assert "Traceback" not in err

    def test_wrong_x_a_length(self, tmp_path, capsys):
        cfg = write_ini(tmp_path, BASE_INI.replace("x_a = 0.0", "x_a = 0.0, 1.0"))
        code, _, err = run(capsys, "solve", cfg)
        assert code == 2

    def test_unknown_family(self, tmp_path, capsys):
        cfg = write_ini(tmp_path, BASE_INI.replace("family = integers", "family = fractal"))
        code, _, err = run(capsys, "solve", cfg)
        assert code == 2
        assert "fractal" in err

    def test_bad_ini_syntax(self, tmp_path, capsys):
        path = tmp_path / "bad.ini"
        path.write_text("this is not ini at all\n")
        code, _, err = run(capsys, "solve", str(path))
        assert code == 2
        assert "Traceback" not in err

    def test_usage_error_on_unknown_subcommand(self, capsys):
        code = main(["frobnicate"])
        capsys.readouterr()
        assert code == 2

    def test_pinned_without_values(self, tmp_path, capsys):
        cfg = write_ini(tmp_path, BASE_INI.replace("terminal = pinned: 5.0", "terminal = pinned:"))
        code, _, err = run(capsys, "solve", cfg)
        assert code == 2


class TestConfigLoading:
    def test_full_roundtrip_of_sections(self, tmp_path):
        cfg = write_ini(tmp_path)
        rc = load_config(cfg)
        assert len(rc.timescale) == 6
        assert rc.problem is not None and rc.problem.n == 1
        assert rc.options is not None and rc.options.T_trunc == 5.0
        assert rc.options.terminal_mode.kind == "pinned"
        assert rc.truncations == (5.0,)
        assert rc.report.tolerance == 1e-6
        assert rc.quad_f is not None

    def test_points_family(self, tmp_path):
        body = """
        [timescale]
        family = points
        points = 0, 1, 1.5, 3
        gap_kinds = s, d, s
        """
        rc = load_config(write_ini(tmp_path, body))
        assert rc.timescale.points == (0.0, 1.0, 1.5, 3.0)

    def test_quad_rejects_foreign_variables(self, tmp_path):
        cfg = write_ini(tmp_path, BASE_INI.replace('f = "1"', 'f = "x1"'))
        try:
            load_config(cfg)
        except ConfigError as exc:
            assert "x1" in str(exc)
        else:
            raise AssertionError("expected ConfigError")
