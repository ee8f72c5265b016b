import csv
import json
import re
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ratebound.cli import main
from ratebound.tasks import grid_utility, load_task, two_task_problem

GOLDEN = Path(__file__).parent / "golden"
WALL = re.compile(rb'"wall_time_seconds": [^\n]*')


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def without_wall_time(data: bytes) -> bytes:
    return WALL.sub(b'"wall_time_seconds": _', data)


class TestSolve:
    def test_beta_100(self, capsys):
        code, out, _ = run(capsys, "solve", "--builtin", "two-task", "--beta", 100)
        doc = json.loads(out)
        assert code == 0 and doc["schema_version"] == 1
        np.testing.assert_allclose(doc["policy"], [[0, 0, 0, 1], [0, 1, 0, 0]], atol=1e-3)
        assert doc["manifest"]["command"][:3] == ["solve", "--builtin", "two-task"]

    def test_beta_1(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        assert run(capsys, "solve", "--builtin", "two-task", "--inv-beta", 1, "--out", out)[0] == 0
        doc = json.loads(out.read_text())
        assert doc["prior"][doc["actions"].index("[0.7,0]")] == pytest.approx(1.0, abs=1e-3)
        assert doc["diagnostics"]["converged"] is True

    def test_missing_task_file(self, capsys):
        code, _, err = run(capsys, "solve", "--task", "missing.json", "--beta", 1)
        assert code == 1 and "missing.json" in err

    def test_not_converged(self, capsys):
        code, out, err = run(capsys, "solve", "--builtin", "two-task", "--beta", 1,
                             "--max-iterations", 3)
        assert code == 2 and json.loads(out)["diagnostics"]["converged"] is False
        assert "converge" in err

    @pytest.mark.parametrize("argv", [
        ["solve", "--builtin", "two-task"],
        ["solve", "--builtin", "two-task", "--beta", "0"],
        ["solve", "--builtin", "two-task", "--beta", "1", "--inv-beta", "1"],
        ["solve", "--builtin", "nope", "--beta", "1"],
        ["frobnicate"],
    ])
    def test_input_errors(self, capsys, argv):
        assert run(capsys, *argv)[0] == 1

    def test_bad_task_document(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"actions": ["a"], "observations": ["y"], "utility": [[1, 2]]}')
        code, _, err = run(capsys, "solve", "--task", bad, "--beta", 1)
        assert code == 1 and "SchemaError" in err


SWEEP_ARGS = ["sweep", "--builtin", "two-task", "--inv-beta-min", "0.05",
              "--inv-beta-max", "1.0", "--points", "400", "--annealed"]


@pytest.fixture(scope="module")
def sweep_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep") / "two_task.csv"
    assert main(SWEEP_ARGS + ["--rate-utility", "--out", str(out)]) == 0
    return out


class TestSweep:
    def test_golden_header(self, sweep_csv):
        golden = (GOLDEN / "sweep_header.csv").read_text()
        assert sweep_csv.read_text().splitlines(keepends=True)[0] == golden

    def test_peak_and_end(self, sweep_csv):
        rows = read_csv(sweep_csv)
        h = [float(r["h_marginal_bits"]) for r in rows]
        assert max(h) == pytest.approx(1.585, abs=0.02)
        last = max(rows, key=lambda r: float(r["inv_beta"]))
        assert float(last["expected_utility"]) == pytest.approx(0.7, abs=1e-3)
        assert float(last["mutual_information_bits"]) < 1e-3
        assert all(r["converged"] == "true" for r in rows)

    def test_floats_round_trip(self, sweep_csv):
        for r in read_csv(sweep_csv)[:20]:
            assert float(r["inv_beta"]) == 1 / float(r["beta"]) or \
                abs(float(r["inv_beta"]) * float(r["beta"]) - 1) < 1e-15
            assert format(float(r["objective"]), ".17g") == r["objective"]

    def test_rate_utility_file(self, sweep_csv):
        ru = sweep_csv.with_name("two_task.rate_utility.csv")
        rows = read_csv(ru)
        assert list(rows[0]) == ["expected_utility", "rate_bits"]
        eu = [float(r["expected_utility"]) for r in rows]
        assert eu == sorted(eu)
        assert eu[0] == pytest.approx(0.7, abs=1e-3)

    def test_manifest_sidecar(self, sweep_csv):
        m = json.loads(Path(str(sweep_csv) + ".manifest.json").read_text())
        assert m["schedule"]["points"] == 400 and m["schedule"]["annealed"] is True
        assert m["task_source"] == "builtin:two-task"

    def test_too_few_points(self, capsys):
        code, _, err = run(capsys, "sweep", "--points", 1)
        assert code == 1 and "TooFewPoints" in err

    def test_missing_out(self, capsys):
        assert run(capsys, "sweep", "--builtin", "two-task", "--beta-min", 1,
                   "--beta-max", 2, "--points", 3)[0] == 1


class TestSample:
    def test_grid_task1(self, capsys):
        code, out, _ = run(capsys, "sample", "--builtin", "grid3", "--beta", 10,
                           "--obs", "task1", "--n", 16, "--seed", 7)
        doc = json.loads(out)
        assert code == 0 and len(doc["samples"]) == 16
        for s in doc["samples"]:
            assert grid_utility([int(c) for c in s["label"]], 1) == 4
            assert s["probability"] == pytest.approx(1 / 9, abs=1e-3)
        assert sum(doc["counts"].values()) == 16

    def test_prior_equals_task2_at_low_beta(self, capsys):
        maps = []
        for obs in ("prior", "task2"):
            code, out, _ = run(capsys, "sample", "--builtin", "grid3", "--beta", 0.1,
                               "--obs", obs, "--n", 16, "--seed", 7)
            assert code == 0
            maps.append(json.loads(out)["source_probabilities"])
        keys = set(maps[0]) | set(maps[1])
        assert max(abs(maps[0].get(k, 0) - maps[1].get(k, 0)) for k in keys) < 1e-3

    def test_two_task_beta1(self, capsys):
        _, out, _ = run(capsys, "sample", "--builtin", "two-task", "--beta", 1,
                        "--obs", "y1", "--n", 5, "--seed", 1)
        assert [s["label"] for s in json.loads(out)["samples"]] == ["[0.7,0]"] * 5

    def test_unknown_observation(self, capsys):
        code, _, err = run(capsys, "sample", "--builtin", "two-task", "--beta", 1,
                           "--obs", "y3")
        assert code == 1 and "y3" in err


class TestMakeTask:
    def test_two_task_round_trip(self, capsys, tmp_path):
        out = tmp_path / "t.json"
        assert run(capsys, "make-task", "--builtin", "two-task", "--out", out)[0] == 0
        assert load_task(out.read_bytes()) == two_task_problem()

    def test_grid(self, capsys):
        code, out, _ = run(capsys, "make-task", "--grid-n", 3)
        assert code == 0 and len(json.loads(out)["actions"]) == 512

    def test_grid_too_large(self, capsys):
        code, _, err = run(capsys, "make-task", "--grid-n", 9)
        assert code == 1 and "GridTooLarge" in err

    def test_file_source(self, capsys, tmp_path):
        out = tmp_path / "t.json"
        run(capsys, "make-task", "--builtin", "two-task", "--out", out)
        code, doc, _ = run(capsys, "solve", "--task", out, "--beta", 100)
        assert code == 0 and json.loads(doc)["manifest"]["task_source"] == str(out)


class TestReplay:
    def test_solve(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        run(capsys, "solve", "--builtin", "two-task", "--beta", 5, "--out", out)
        first = out.read_bytes()
        saved = tmp_path / "manifest_copy.json"
        saved.write_bytes(first)
        out.unlink()
        assert run(capsys, "replay", saved)[0] == 0
        assert without_wall_time(out.read_bytes()) == without_wall_time(first)

    def test_sample(self, capsys, tmp_path):
        out = tmp_path / "s.json"
        run(capsys, "sample", "--builtin", "grid3", "--beta", 10, "--obs", "task3",
            "--n", 16, "--seed", 3, "--out", out)
        first = out.read_bytes()
        saved = tmp_path / "manifest_copy.json"
        saved.write_bytes(first)
        out.unlink()
        assert run(capsys, "replay", saved)[0] == 0
        assert without_wall_time(out.read_bytes()) == without_wall_time(first)

    def test_sweep(self, capsys, tmp_path):
        out = tmp_path / "s.csv"
        run(capsys, "sweep", "--builtin", "two-task", "--beta-min", 1, "--beta-max", 20,
            "--points", 30, "--rate-utility", "--out", out)
        ru = tmp_path / "s.rate_utility.csv"
        first, first_ru = out.read_bytes(), ru.read_bytes()
        out.unlink()
        ru.unlink()
        assert run(capsys, "replay", str(out) + ".manifest.json")[0] == 0
        assert out.read_bytes() == first and ru.read_bytes() == first_ru

    def test_redirected_output(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        run(capsys, "solve", "--builtin", "two-task", "--beta", 5, "--out", out)
        other = tmp_path / "again.json"
        assert run(capsys, "replay", out, "--out", other)[0] == 0
        a, b = json.loads(out.read_text()), json.loads(other.read_text())
        assert a["policy"] == b["policy"] and a["prior"] == b["prior"]

    def test_not_a_manifest(self, capsys, tmp_path):
        bad = tmp_path / "x.json"
        bad.write_text("{}")
        assert run(capsys, "replay", bad)[0] == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ratebound", "make-task", "--grid-n", "9"],
                          capture_output=True, text=True)
    assert proc.returncode == 1 and "GridTooLarge" in proc.stderr
