import csv
import json
import os
import subprocess

import pytest

CLI = os.environ.get("FREQRISE_CLI", "freqrise")


def run(*args, cwd):
    return subprocess.run([CLI, *map(str, args)], cwd=cwd, capture_output=True, text=True)


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run("--seed", 5, "gen-data", "--out", "data.bin", "--n", 40, cwd=d).returncode == 0
    return d


def test_gen_data_is_reproducible(workdir):
    assert run("--seed", 5, "gen-data", "--out", "again.bin", "--n", 40, cwd=workdir).returncode == 0
    assert (workdir / "data.bin").read_bytes() == (workdir / "again.bin").read_bytes()


def test_refuses_overwrite_without_force(workdir):
    assert run("--seed", 5, "gen-data", "--out", "data.bin", "--n", 40, cwd=workdir).returncode == 1
    assert run("--seed", 5, "--force", "gen-data", "--out", "data.bin", "--n", 40, cwd=workdir).returncode == 0


def test_usage_errors_exit_2(workdir):
    assert run("gen-data", "--out", "x.bin", "--sigma", -1, cwd=workdir).returncode == 2
    assert run("explain", "--no-such-flag", cwd=workdir).returncode == 2


def test_missing_input_exits_1(workdir):
    assert run("explain", "--model", "oracle", "--data", "absent.bin", cwd=workdir).returncode == 1


def test_explain_and_evaluate(workdir):
    r = run("explain", "--model", "oracle", "--data", "data.bin", "--indices", "0:12", "--require-gt",
            "--n-masks", 300, "--output", "probability", "--out-dir", "maps", cwd=workdir)
    assert r.returncode == 0, r.stderr
    maps = sorted((workdir / "maps").glob("map_*.csv"))
    assert maps
    r = run("evaluate", "--maps", "maps", "--data", "data.bin", "--model", "oracle", "--schedule", "short",
            "--with-baselines", "--postprocess", 0.997, "--out-dir", "report", cwd=workdir)
    assert r.returncode == 0, r.stderr
    report = json.loads((workdir / "report" / "report.json").read_text())
    methods = {rep["method"] for rep in report["reports"]}
    assert {"FreqRISE", "Random", "Amplitude"} <= methods
    with open(workdir / "report" / "curves.csv") as f:
        rows = list(csv.DictReader(f))
    assert {row["method"] for row in rows} >= {"FreqRISE", "Random"}
    assert (workdir / "report" / "curves.svg").read_text().startswith("<svg")


def test_sweep_postprocess(workdir):
    r = run("sweep-postprocess", "--maps", "maps", "--data", "data.bin", "--model", "oracle", "--p", "0,0.5,0.5",
            "--schedule", "short", "--out", "sweep.csv", cwd=workdir)
    assert r.returncode == 0, r.stderr
    with open(workdir / "sweep.csv") as f:
        rows = list(csv.DictReader(f))
    assert [float(row["p"]) for row in rows] == [0.0, 0.5]
