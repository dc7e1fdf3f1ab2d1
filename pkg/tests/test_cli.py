import csv
import json

import pytest

from subdiff.cli import RunConfig, load_config, main, read_config_values


def write_config(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text + f"\nout_dir = {tmp_path / 'out'}\n")
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestConfig:
    def test_defaults_without_file(self):
        assert load_config(None) == RunConfig()

    def test_parses_types_and_comments(self, tmp_path):
        path = write_config(
            tmp_path,
            "gamma = 0.3   # subdiffusive\nimpulse_times = 0, 0.5\nprobe_node = none\nn_intervals = 40",
        )
        values = read_config_values(path)
        assert values["gamma"] == 0.3
        assert values["impulse_times"] == (0.0, 0.5)
        assert values["probe_node"] is None
        assert values["n_intervals"] == 40

    def test_empty_list(self, tmp_path):
        assert read_config_values(write_config(tmp_path, "impulse_times ="))["impulse_times"] == ()

    @pytest.mark.parametrize(
        "text, match",
        [
            ("colour = blue", "unknown config key"),
            ("gamma = half", "bad value for gamma"),
            ("scheme = crank", "scheme must be"),
            ("t_end = 0", "t_end must be"),
            ("problem = manufactured", "takes no impulses"),
        ],
    )
    def test_rejects(self, tmp_path, text, match):
        with pytest.raises(ValueError, match=match):
            load_config(write_config(tmp_path, text))


class TestSolve:
    def test_default_run_writes_outputs(self, tmp_path, capsys):
        path = write_config(tmp_path, "t_end = 1.0")
        assert main(["solve", str(path)]) == 0
        out = tmp_path / "out"
        sol = read_rows(out / "solution.csv")
        assert sol[0] == ["t", "x", "U", "V", "exact", "abs_error"]
        # snapshots up to t_end: 4.08e-4, 0.034 and 1.0 on 101 nodes
        assert len(sol) == 1 + 3 * 101
        assert {round(float(r[0]), 2) for r in sol[1:]} == {0.0, 0.03, 1.0}

        mesh = read_rows(out / "mesh.csv")
        assert mesh[0] == ["m", "t_m", "dt_m"]
        assert mesh[1] == ["0", "0.0", ""]
        assert float(mesh[-1][1]) == 1.0
        assert 59 <= len(mesh) - 2 <= 69

        trace = read_rows(out / "error_trace.csv")
        assert trace[0] == ["t", "abs_error_at_probe"]
        assert len(trace) == len(mesh) - 1

        summary = json.loads((out / "summary.json").read_text())
        assert set(summary) == {
            "steps", "wall_ms", "dt_min_used", "dt_max_used", "t_final", "scheme", "policy"
        }
        assert summary["steps"] == len(mesh) - 2
        assert summary["t_final"] == 1.0
        assert summary["dt_min_used"] <= summary["dt_max_used"] <= 0.02 * (1 + 1e-12)

    def test_rerun_is_byte_identical(self, tmp_path):
        path = write_config(tmp_path, "t_end = 0.2")
        outputs = []
        for _ in range(2):
            assert main(["solve", str(path)]) == 0
            out = tmp_path / "out"
            files = {n: (out / n).read_bytes() for n in ("solution.csv", "mesh.csv", "error_trace.csv")}
            summary = json.loads((out / "summary.json").read_text())
            summary.pop("wall_ms")
            outputs.append((files, summary))
        assert outputs[0] == outputs[1]

    def test_no_impulses_gives_zero_solution(self, tmp_path):
        path = write_config(tmp_path, "impulse_times =\nt_end = 0.1")
        assert main(["solve", str(path)]) == 0
        rows = read_rows(tmp_path / "out" / "solution.csv")[1:]
        assert rows and all(float(r[2]) == 0.0 and float(r[3]) == 0.0 for r in rows)

    def test_manufactured_problem(self, tmp_path):
        path = write_config(
            tmp_path,
            "problem = manufactured\nx_left = 0\nx_right = 1\nn_intervals = 20\n"
            "impulse_times =\npolicy = fixed\ndt_fixed = 0.01\nt_end = 1\nsnapshot_times = 1",
        )
        assert main(["solve", str(path)]) == 0
        rows = read_rows(tmp_path / "out" / "solution.csv")[1:]
        assert len(rows) == 21
        assert max(float(r[5]) for r in rows) < 0.05

    def test_bad_gamma_names_bound(self, tmp_path, capsys):
        assert main(["solve", str(write_config(tmp_path, "gamma = 1.5"))]) == 1
        err = capsys.readouterr().err
        assert "gamma" in err and "< 1" in err and "1.5" in err

    def test_missing_file(self, tmp_path, capsys):
        assert main(["solve", str(tmp_path / "nope.ini")]) == 1
        assert "cannot read config" in capsys.readouterr().err

    def test_divergent_explicit_run_is_a_solver_failure(self, tmp_path, capsys):
        path = write_config(tmp_path, "scheme = explicit\npolicy = fixed\ndt_fixed = 0.01\nt_end = 5")
        assert main(["solve", str(path)]) == 2
        assert "no longer finite" in capsys.readouterr().err
        assert not (tmp_path / "out" / "solution.csv").exists()


class TestExperiment:
    def test_unknown_name(self, capsys):
        assert main(["experiment", "foo"]) == 1
        assert "unknown experiment" in capsys.readouterr().err

    def test_stability_default(self, tmp_path, capsys, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["experiment", "stability"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert sum(line.startswith("PASS trial_") for line in lines) == 50
        assert not any(line.startswith("FAIL") for line in lines)
        assert (tmp_path / "out" / "stability.csv").exists()
        assert read_rows(tmp_path / "out" / "stability_trials.csv")[0] == ["gamma", "max_ratio"]

    def test_failing_criteria_exit_3(self, tmp_path, capsys):
        # explicit scheme on random meshes with large steps: growth breaks the bound
        path = write_config(tmp_path, "scheme = explicit\ntrials = 3\nn_steps = 60")
        assert main(["experiment", "stability", str(path)]) == 3
        assert "FAIL trial_" in capsys.readouterr().out

    def test_bad_experiment_config(self, tmp_path):
        assert main(["experiment", "stability", str(write_config(tmp_path, "trials = many"))]) == 1
