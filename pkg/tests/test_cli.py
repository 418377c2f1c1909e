"""Command-line entry points: synthesis, single sessions, the comparison
and ablation grids, and their CSV reports."""

import csv
import subprocess
import sys

import numpy as np
import pytest

from vexal import dataset as ds
from vexal.cli import main

SMALL = ["--n", "40", "--d", "2", "--pos", "12", "--k", "3"]


def read_report(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:-1], rows[-1]  # header, data rows, samp footer


class TestSynth:
    def test_writes_exact_positive_count(self, tmp_path, capsys):
        out = tmp_path / "pool.csv"
        code = main(["synth", "--n", "50", "--d", "3", "--pos", "9",
                     "--seed", "4", "--out", str(out)])
        assert code == 0
        assert "wrote 50 samples (9 positive)" in capsys.readouterr().out
        pool = ds.load_csv(out)
        assert pool.n == 50 and pool.d == 3
        assert sum(1 for i in range(50) if pool.label_of(i) == 1) == 9

    def test_fraction_form(self, tmp_path):
        out = tmp_path / "pool.csv"
        assert main(["synth", "--n", "40", "--d", "2", "--pos", "0.25",
                     "--out", str(out)]) == 0
        pool = ds.load_csv(out)
        assert sum(1 for i in range(40) if pool.label_of(i) == 1) == 10

    def test_byte_identical_per_seed(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            main(["synth", "--n", "30", "--d", "2", "--pos", "8",
                  "--seed", "7", "--out", str(out)])
        assert a.read_bytes() == b.read_bytes()


class TestExitCodes:
    def test_usage_error_is_2(self, capsys):
        assert main(["plot"]) == 2
        assert main(["session"]) == 2  # --strategy is required
        capsys.readouterr()

    def test_runtime_failure_is_1(self, tmp_path, capsys):
        code = main(["synth", "--n", "40", "--d", "2", "--pos", "0",
                     "--out", str(tmp_path / "x.csv")])
        assert code == 1
        assert capsys.readouterr().err.startswith("error:")

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "vexal.cli", "synth", "--n", "20",
             "--d", "2", "--pos", "5", "--out", str(tmp_path / "p.csv")],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert (tmp_path / "p.csv").is_file()


class TestSession:
    def test_report_and_stdout(self, tmp_path, capsys):
        code = main(["session", *SMALL, "--t", "3", "--strategy", "random",
                     "--seed", "5", "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert out.count("iteration ") == 3
        assert "auc " in out

        header, rows, samp = read_report(tmp_path / "session.csv")
        assert header == ["config", "variant", "iter1", "iter2", "iter3",
                          "auc", "iter1_full", "iter2_full", "iter3_full",
                          "auc_full"]
        assert rows[0][0] == "random"
        assert samp[0] == "samp"
        # sampling percent: t*K / (n/2) * 100 with K=3, n=40
        assert samp[2] == "15.00" and samp[3] == "30.00" and samp[4] == "45.00"

    def test_learned_session_with_trajectories(self, tmp_path, capsys):
        traj = tmp_path / "traces"
        code = main(["session", *SMALL, "--t", "3", "--strategy",
                     "learned-surrogate", "--rho", "0.05", "--seed", "1",
                     "--trajectory-dir", str(traj), "--out", str(tmp_path)])
        assert code == 0
        capsys.readouterr()
        names = sorted(p.name for p in traj.iterdir())
        assert names == ["trajectory_t1.csv", "trajectory_t2.csv"]
        with open(traj / "trajectory_t1.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["iter", "objective", "step_l1", "gamma"]
        assert len(rows) > 1

    def test_auc_recomputable_from_full_columns(self, tmp_path, capsys):
        main(["session", *SMALL, "--t", "4", "--strategy", "uncertainty",
              "--seed", "2", "--out", str(tmp_path)])
        capsys.readouterr()
        _, rows, _ = read_report(tmp_path / "session.csv")
        full = [float(v) for v in rows[0][7:11]]
        assert float(rows[0][11]) == float(np.mean(full))


class TestCompare:
    def test_layout_and_both_precisions(self, tmp_path, capsys):
        code = main(["compare", *SMALL, "--t", "2", "--seed", "0",
                     "--out", str(tmp_path)])
        assert code == 0
        capsys.readouterr()
        header, rows, samp = read_report(tmp_path / "comparison.csv")
        assert [r[0] for r in rows] == ["random", "uncertainty", "maxmin",
                                        "learned-early", "learned-surrogate",
                                        "supervised"]
        assert [r[1] for r in rows] == ["", "", "", "early", "surrogate", ""]
        for r in rows:
            # displayed cells are the truncated rendering of the full cells
            for shown, exact in zip(r[2:5], r[5:8]):
                assert shown == "" or float(shown) == pytest.approx(
                    float(exact), abs=0.01)
        # supervised row repeats one constant reference EER
        assert rows[-1][5] == rows[-1][6]

    def test_single_seed_files_are_byte_equal(self, tmp_path, capsys):
        main(["compare", *SMALL, "--t", "2", "--seed", "3",
              "--out", str(tmp_path)])
        capsys.readouterr()
        avg = (tmp_path / "comparison.csv").read_bytes()
        per = (tmp_path / "comparison_seed3.csv").read_bytes()
        assert avg == per

    def test_multi_seed_average_re_derivable(self, tmp_path, capsys):
        main(["compare", *SMALL, "--t", "2", "--seed", "0,1",
              "--out", str(tmp_path)])
        capsys.readouterr()
        _, avg_rows, _ = read_report(tmp_path / "comparison.csv")
        _, s0_rows, _ = read_report(tmp_path / "comparison_seed0.csv")
        _, s1_rows, _ = read_report(tmp_path / "comparison_seed1.csv")
        for avg, a, b in zip(avg_rows, s0_rows, s1_rows):
            for col in (5, 6):  # full-precision iteration columns
                if avg[col] == "":
                    continue
                assert float(avg[col]) == pytest.approx(
                    (float(a[col]) + float(b[col])) / 2, rel=1e-12)

    def test_repeat_flag_equals_comma_form(self, tmp_path, capsys):
        main(["compare", *SMALL, "--t", "2", "--seed", "0,1",
              "--out", str(tmp_path / "x")])
        main(["compare", *SMALL, "--t", "2", "--seed", "0", "--seed", "1",
              "--out", str(tmp_path / "y")])
        capsys.readouterr()
        assert (tmp_path / "x" / "comparison.csv").read_bytes() == \
            (tmp_path / "y" / "comparison.csv").read_bytes()

    def test_deterministic_across_runs(self, tmp_path, capsys):
        for sub in ("r1", "r2"):
            main(["compare", *SMALL, "--t", "2", "--seed", "4",
                  "--out", str(tmp_path / sub)])
        capsys.readouterr()
        assert (tmp_path / "r1" / "comparison.csv").read_bytes() == \
            (tmp_path / "r2" / "comparison.csv").read_bytes()


class TestAblate:
    def test_grid_layout_and_shared_first_iteration(self, tmp_path, capsys):
        code = main(["ablate", *SMALL, "--t", "2", "--seed", "0", "--rho",
                     "0.05", "--out", str(tmp_path)])
        assert code == 0
        capsys.readouterr()
        header, rows, _ = read_report(tmp_path / "ablation.csv")
        labels = [r[0] for r in rows]
        assert labels == ["amb", "amb", "div", "div", "rep", "rep",
                          "rep+amb", "rep+amb", "div+amb", "div+amb",
                          "rep+div", "rep+div", "rep+div+amb", "rep+div+amb"]
        assert [r[1] for r in rows] == ["early", "surrogate"] * 7
        # every config shares the seeded random initial display, so the
        # first-iteration error is identical across the whole grid
        first = {r[5] for r in rows}
        assert len(first) == 1 and "" not in first
