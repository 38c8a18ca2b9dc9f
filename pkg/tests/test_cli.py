import json
import subprocess
import sys

import pytest

from wassci.cli import main


@pytest.fixture
def w2_files(tmp_path):
    x = tmp_path / "x.csv"
    y = tmp_path / "y.csv"
    x.write_text("1\n4\n")
    y.write_text("0\n2\n5\n")
    return x, y


class TestCi:
    def test_w2_report(self, w2_files, tmp_path, capsys):
        x, y = w2_files
        out = tmp_path / "r.json"
        code = main(["ci", "--x", str(x), "--y", str(y), "--sigma", "1", "--out", str(out)])
        assert code == 0
        rep = json.loads(out.read_text())
        assert rep["schema"] == 1
        assert rep["distance"] == pytest.approx(7 / 6)
        assert rep["z_obs"] == pytest.approx(7 / 6)
        assert rep["basis"] == [1, 2, 5, 6]
        summary = capsys.readouterr().out.strip().splitlines()
        assert len(summary) == 1 and summary[0].startswith("distance=")

    def test_dump_lp(self, w2_files, tmp_path):
        x, y = w2_files
        dump = tmp_path / "lp.txt"
        assert main(["ci", "--x", str(x), "--y", str(y), "--out", str(tmp_path / "r.json"), "--dump-lp", str(dump)]) == 0
        assert dump.read_text().splitlines() == ["2 3", "1.0 1.0 4.0 4.0 2.0 1.0", "1 2 5 6"]

    def test_report_on_stdout(self, w2_files, capsys):
        x, y = w2_files
        assert main(["ci", "--x", str(x), "--y", str(y)]) == 0
        assert json.loads(capsys.readouterr().out)["n"] == 2

    def test_alpha_out_of_range(self, w2_files, capsys):
        x, y = w2_files
        assert main(["ci", "--x", str(x), "--y", str(y), "--alpha", "1.5"]) == 3
        assert "alpha" in capsys.readouterr().err

    def test_exclusive_sigma_flags(self, w2_files):
        x, y = w2_files
        assert main(["ci", "--x", str(x), "--y", str(y), "--sigma", "1", "--estimate-sigma"]) == 3

    def test_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("1\nx\n")
        assert main(["ci", "--x", str(bad), "--y", str(bad)]) == 3
        assert ":2:1:" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["ci", "--x", str(tmp_path / "no.csv"), "--y", str(tmp_path / "no.csv")]) == 3

    def test_degenerate_refusal(self, tmp_path, capsys):
        x = tmp_path / "x.csv"
        y = tmp_path / "y.csv"
        x.write_text("0\n1\n")
        y.write_text("0.3\n2\n")
        assert main(["ci", "--x", str(x), "--y", str(y)]) == 2
        err = capsys.readouterr().err
        assert "degenerate" in err and "t[" in err
        assert main(["ci", "--x", str(x), "--y", str(y), "--allow-degenerate", "--out", str(tmp_path / "r.json")]) == 0
        assert json.loads((tmp_path / "r.json").read_text())["warnings"]

    def test_numerical_failure(self, w2_files, monkeypatch, capsys):
        from wassci import NumericalFailure, cli

        def boom(*args, **kwargs):
            raise NumericalFailure("basis became singular")

        monkeypatch.setattr(cli, "run_algorithm_1", boom)
        x, y = w2_files
        assert main(["ci", "--x", str(x), "--y", str(y)]) == 4
        err = capsys.readouterr().err.strip().splitlines()
        assert len(err) == 1 and "NumericalFailure" in err[0]

    def test_does_not_modify_inputs(self, w2_files, tmp_path):
        x, y = w2_files
        before = (x.read_bytes(), y.read_bytes())
        main(["ci", "--x", str(x), "--y", str(y), "--out", str(tmp_path / "r.json")])
        assert (x.read_bytes(), y.read_bytes()) == before


class TestSimulate:
    def test_coverage_records(self, tmp_path, capsys):
        out = tmp_path / "cov.json"
        args = ["simulate-coverage", "--delta", "0,1,2,3,4", "--trials", "20", "--seed", "7", "--out", str(out)]
        assert main(args) == 0
        doc = json.loads(out.read_text())
        assert doc["schema"] == 1 and doc["kind"] == "coverage"
        assert [r["config"]["delta"] for r in doc["records"]] == [0, 1, 2, 3, 4]
        assert len(capsys.readouterr().out.strip().splitlines()) == 1

    def test_seed_determinism(self, tmp_path):
        outs = []
        for k, jobs in enumerate(("1", "1", "2")):
            out = tmp_path / f"run{k}.json"
            main(["simulate-length", "--delta", "0,2", "--trials", "15", "--seed", "7", "--jobs", jobs, "--out", str(out)])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_trials_csv_per_delta(self, tmp_path):
        base = tmp_path / "trials.csv"
        main(["simulate-coverage", "--delta", "0,2", "--trials", "3", "--out", str(tmp_path / "c.json"), "--trials-csv", str(base)])
        assert (tmp_path / "trials_delta0.csv").exists() and (tmp_path / "trials_delta2.csv").exists()

    def test_benchmark_table(self, tmp_path):
        out = tmp_path / "b.json"
        assert main(["benchmark", "--n", "4,8", "--trials", "2", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert [row["n"] for row in doc["timings"]] == [4, 8]

    def test_robustness(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["robustness", "--trials", "5", "--out", str(out)]) == 0
        assert set(json.loads(out.read_text())["records"]) == {"laplace", "skew_normal", "student_t", "estimated_variance"}

    def test_bad_noise(self):
        assert main(["simulate-coverage", "--noise", "cauchy"]) == 3

    def test_requires_subcommand(self):
        assert main([]) == 3


def test_module_entry_point(w2_files):
    x, y = w2_files
    proc = subprocess.run(
        [sys.executable, "-m", "wassci", "ci", "--x", str(x), "--y", str(y), "--alpha", "2"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 3
    assert proc.stdout == ""
