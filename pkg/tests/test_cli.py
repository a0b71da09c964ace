import json
import os
import subprocess
import sys

import numpy as np
import pytest

from dpje import cli


@pytest.fixture
def identity3(tmp_path):
    path = tmp_path / "I3.txt"
    path.write_text("1 0 0\n0 1 0\n0 0 1\n", encoding="utf-8")
    return str(path)


@pytest.fixture
def random20(tmp_path):
    path = tmp_path / "r.csv"
    A = np.random.default_rng(5).standard_normal((20, 3))
    path.write_text("\n".join(",".join(repr(float(x)) for x in row) for row in A) + "\n")
    return str(path)


def _json(capsys):
    out = capsys.readouterr()
    return json.loads(out.out), out.err


def test_compute_identity(identity3, capsys):
    assert cli.main(["compute", "--input", identity3, "--xi", "0.1", "--seed", "0"]) == 0
    out, err = _json(capsys)
    assert out["sum_v"] == pytest.approx(3, rel=1e-12)
    assert out["max_h"] == pytest.approx(1, abs=1e-2)
    assert "OK" in err


def test_compute_identity_with_stubs_is_exact(identity3, capsys):
    argv = ["compute", "--input", identity3, "--sampling", "full", "--sketch", "isometry",
            "--iters", "10"]
    assert cli.main(argv) == 0
    out, _ = _json(capsys)
    assert out["max_h"] == pytest.approx(1, abs=1e-13)
    np.testing.assert_allclose(out["v"], 1, atol=1e-14)


def test_compute_out_file_and_trace(identity3, tmp_path, capsys):
    out_path, tr_path = tmp_path / "res.json", tmp_path / "tr.csv"
    argv = ["compute", "--input", identity3, "--iters", "4", "--seed", "1",
            "--out", str(out_path), "--trace", str(tr_path)]
    assert cli.main(argv) == 0
    summary, _ = _json(capsys)
    assert summary["ok"] is True
    assert json.loads(out_path.read_text())["T"] == 4
    assert tr_path.read_text().startswith("iteration,i,w")


def test_missing_file_exit_1(tmp_path, capsys):
    assert cli.main(["compute", "--input", str(tmp_path / "none.txt")]) == 1
    assert "ParseError" in capsys.readouterr().err


def test_under_converged_run_exit_2(tmp_path, capsys):
    # many near-copies of one facet: uniform starting weights are far from optimal
    rng = np.random.default_rng(0)
    A = np.vstack([np.c_[np.ones(40), 0.01 * rng.standard_normal(40)], [[0.0, 1.0]]])
    path = tmp_path / "hard.txt"
    np.savetxt(path, A)
    assert cli.main(["compute", "--input", str(path), "--iters", "1", "--seed", "0"]) == 2
    out, err = _json(capsys)
    assert out["max_h"] > 1.21 and "FAIL" in err


def test_exact_identity_and_random(identity3, random20, capsys):
    assert cli.main(["exact", "--input", identity3, "--iters", "5"]) == 0
    out, _ = _json(capsys)
    np.testing.assert_allclose(out["v"], 1)
    assert cli.main(["exact", "--input", random20, "--tol", "1e-2"]) == 0
    out, _ = _json(capsys)
    assert out["optimality"]["optimal"]


def test_exact_rank_deficient(tmp_path, capsys):
    path = tmp_path / "r.txt"
    path.write_text("1 1\n2 2\n")
    assert cli.main(["exact", "--input", str(path)]) == 1
    assert "RankError" in capsys.readouterr().err


def test_calibrate(tmp_path, capsys):
    base = ["calibrate", "--eps", "0.5", "--delta", "1e-5", "--eps0", "1e-3", "--L", "10",
            "--iters", "100"]
    assert cli.main(base) == 2
    assert "BudgetError" in capsys.readouterr().err
    table = tmp_path / "t.csv"
    assert cli.main(base + ["--c1", "100", "--table", str(table)]) == 0
    out, _ = _json(capsys)
    assert out["sigma"] == pytest.approx(1.3849266172275738, rel=1e-12)
    assert out["delta_verified"] <= 1e-5
    assert table.read_text().startswith("lambda,alpha")


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.conf"
    cfg.write_text("# calibration budget\nc1 = 100\neps = 5\n")
    argv = ["calibrate", "--eps", "0.5", "--delta", "1e-5", "--eps0", "1e-3", "--L", "10",
            "--iters", "100", "--config", str(cfg)]
    assert cli.main(argv) == 0
    out, _ = _json(capsys)
    assert out["c1"] == 100 and out["epsilon"] == 0.5


def test_seed_from_environment(identity3, capsys, monkeypatch):
    monkeypatch.setenv("DPJE_SEED", "17")
    argv = ["compute", "--input", identity3, "--iters", "5"]
    cli.main(argv)
    a, _ = _json(capsys)
    cli.main(argv)
    b, _ = _json(capsys)
    assert a["v"] == b["v"]


def test_audit_lipschitz_identity(tmp_path, capsys):
    path = tmp_path / "I2.txt"
    path.write_text("1 0\n0 1\n")
    assert cli.main(["audit", "--input", str(path), "--eps0", "1e-4", "--seed", "0"]) == 0
    out, _ = _json(capsys)
    assert out["violations"] == [] and out["trials"] == 1000
    assert cli.main(["audit", "--input", str(path), "--eps0", "0.5"]) == 1
    assert "PreconditionError" in capsys.readouterr().err


def test_audit_moments(capsys):
    assert cli.main(["audit", "--moments"]) == 0
    out, _ = _json(capsys)
    assert out["violations"] == [] and out["points"] > 300


def test_bench_trivial(capsys):
    argv = ["bench", "--n-list", "2,4", "--d", "2", "--iters", "5", "--repeats", "1"]
    cli.main(argv)
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "n,d,T,nnz,seconds"
    assert float(lines[1].split(",")[-1]) < 1.0


def test_module_entry_point(identity3):
    env = dict(os.environ, DPJE_SEED="0")
    proc = subprocess.run([sys.executable, "-m", "dpje", "compute", "--input", identity3,
                           "--iters", "3", "--threads", "1"],
                          capture_output=True, text=True, env=env, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["schema"] == "dpje/1"
