from __future__ import annotations

import json
import subprocess
import sys

import pytest

from lowbmm import io as lio
from lowbmm.cli import EXIT_COMPUTE, EXIT_INPUT, EXIT_IO, EXIT_USAGE, main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def simulated(tmp_path):
    assert run("simulate", "--seed", 3, "--n", 15, "--n-star", 5, "--N", 12, "--alpha", 8,
               "-o", tmp_path / "d.csv", "--truth", tmp_path / "t.json") == 0
    return tmp_path


def test_simulate_is_byte_deterministic(simulated):
    tmp = simulated
    assert run("--seed", 3, "simulate", "--n", 15, "--n-star", 5, "--N", 12, "--alpha", 8,
               "-o", tmp / "d2.csv", "--truth", tmp / "t2.json") == 0
    assert (tmp / "d.csv").read_bytes() == (tmp / "d2.csv").read_bytes()
    assert (tmp / "t.json").read_bytes() == (tmp / "t2.json").read_bytes()
    ds = lio.read_dataset(tmp / "d.csv")
    assert ds.rows.shape == (12, 15)


def test_simulate_with_noise(tmp_path):
    args = ["simulate", "--seed", 1, "--n", 20, "--n-star", 8, "--N", 50, "--alpha", 10, "--truth", tmp_path / "t.json"]
    assert run(*args, "--noise-levels", 4, "-o", tmp_path / "noisy.csv") == 0
    assert run(*args, "-o", tmp_path / "clean.csv") == 0
    noisy, clean = lio.read_dataset(tmp_path / "noisy.csv"), lio.read_dataset(tmp_path / "clean.csv")
    changed = (noisy.rows != clean.rows).any(axis=0).sum()
    assert 8 <= changed <= 4 + 4 * 12  # 4 true items swapped with noise items


def test_fit_summarize_evaluate(simulated, capsys):
    tmp = simulated
    fit = ["fit", tmp / "d.csv", "--seed", 4, "--alpha", 8, "--n-star", 5, "-M", 2000, "--chains", 2]
    assert run(*fit, "--draws", tmp / "a.csv", "--summary", tmp / "s1.json") == 0
    assert run(*fit, "--draws", tmp / "b.npz", "--summary", tmp / "s2.json") == 0
    assert (tmp / "s1.json").read_bytes() == (tmp / "s2.json").read_bytes()
    samples, _ = lio.read_draws(tmp / "a.csv")
    assert len(samples) == 2 * 1600

    outs = {}
    for src in ("a.csv", "b.npz"):
        out = tmp / src.replace(".", "_")
        out.mkdir()
        assert run("summarize", tmp / src, "--summary", out / "s.json", "--K", 2, "--c", 0.5,
                   "--heatplot", out / "h.csv", "--trace", out / "tr.csv", "--violin", out / "v.csv") == 0
        outs[src] = {f: (out / f).read_bytes() for f in ("s.json", "h.csv", "tr.csv", "v.csv")}
    assert outs["a.csv"] == outs["b.npz"]
    doc = json.loads(outs["a.csv"]["s.json"])
    assert doc["top_selection"]["K"] == 2 and doc["draws"] == 3200

    capsys.readouterr()
    assert run("evaluate", tmp / "s1.json", tmp / "t.json") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["coverage"] == 1.0 and report["d_R"] == 0


def test_estimate_alpha_outputs(simulated, capsys):
    tmp = simulated
    args = ["estimate-alpha", tmp / "d.csv", "--seed", 2, "--reps", 2, "--n-star", 5]
    assert run(*args, "-o", tmp / "g1.csv", "--json", tmp / "a1.json") == 0
    first = capsys.readouterr().out
    assert run(*args, "-o", tmp / "g2.csv", "--json", tmp / "a2.json") == 0
    assert capsys.readouterr().out == first and float(first) > 0
    assert (tmp / "g1.csv").read_bytes() == (tmp / "g2.csv").read_bytes()
    assert (tmp / "a1.json").read_bytes() == (tmp / "a2.json").read_bytes()
    assert json.loads((tmp / "a1.json").read_text())["alpha_hat_nstar"] == float(first)


def test_bench_is_deterministic(tmp_path, capsys):
    args = ["bench", "--seed", 1, "--n", 10, "--n-star", 3, "--N", 5, "--alpha", 2, "-M", 200, "--repetitions", 3]
    assert run(*args, "--rows", tmp_path / "r1.csv") == 0
    first = capsys.readouterr().out
    assert run(*args, "--rows", tmp_path / "r2.csv") == 0
    assert capsys.readouterr().out == first
    assert (tmp_path / "r1.csv").read_bytes() == (tmp_path / "r2.csv").read_bytes()
    doc = json.loads(first)
    assert set(doc["results"][0]["aggregate"]) == {"lowbmm", "borda"}
    assert "wall_time_sec" not in doc["results"][0]["aggregate"]["borda"]


def test_bench_from_config(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("seed: 1\nbench:\n  repetitions: 2\n  methods: [borda]\n  scenarios:\n"
                   "    - {n: 10, n_star: 3, N: 5, alpha: 2.0}\n    - {n: 12, n_star: 4, N: 5, alpha: 2.0}\n")
    assert run("bench", "--config", cfg) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [r["scenario"]["n"] for r in doc["results"]] == [10, 12]


def test_exit_codes(simulated, tmp_path):
    tmp = simulated
    (tmp / "bad.csv").write_text("a,b\n1,1\n")
    assert run("fit", tmp / "bad.csv", "--alpha", 1, "--n-star", 1, "--draws", tmp / "x.csv") == EXIT_INPUT
    assert run("fit", tmp / "d.csv", "--n-star", 1, "--draws", tmp / "x.csv") == EXIT_USAGE
    assert run("fit", tmp / "d.csv", "--alpha", 1, "--n-star", 99, "--draws", tmp / "x.csv") == EXIT_USAGE
    assert run("fit", tmp / "missing.csv", "--alpha", 1, "--n-star", 2, "--draws", tmp / "x.csv") == EXIT_IO
    assert run("fit", tmp / "d.csv", "--alpha", 1, "--n-star", 2, "-M", 100,
               "--draws", tmp / "no" / "dir" / "x.csv") == EXIT_IO
    (tmp / "c.yaml").write_text("bogus: 1\n")
    assert run("--config", tmp / "c.yaml", "bench") == EXIT_USAGE
    assert run("fit", tmp / "d.csv", "--seed", 1, "--alpha", 1, "--n-star", 2, "-M", 100, "--draws", tmp / "y.csv") == 0
    assert run("summarize", tmp / "y.csv", "--summary", tmp / "s.json", "--k", 16) == EXIT_COMPUTE  # k > n
    with pytest.raises(SystemExit) as exc:
        run("fit")
    assert exc.value.code == 2


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "lowbmm.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "estimate-alpha" in out.stdout
