"""End-to-end checks of the command-line runner and its artifacts."""
import json
import socket
import subprocess
import sys
from pathlib import Path

import pytest

from frisim.cli import main

TOY = str(Path(__file__).resolve().parents[1] / "configs" / "toy.toml")


def run_cli(*argv):
    return main(list(argv))


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
    return header, rows


def test_validate_config_marks_overrides_as_user(capsys):
    rc = run_cli("validate-config", "--config", TOY,
                 "--set", "scenario.m_count=4")
    out = capsys.readouterr().out
    assert rc == 0
    assert "m_count = 4  # user" in out
    assert "# model" in out and "# assumed" in out


def test_missing_config_exits_2_naming_path(capsys):
    rc = run_cli("run", "--config", "/nowhere/gone.toml", "--out", "/tmp/x")
    err = capsys.readouterr().err
    assert rc == 2
    assert "/nowhere/gone.toml" in err


def test_unknown_override_exits_2(capsys):
    rc = run_cli("validate-config", "--config", TOY,
                 "--set", "scenario.bogus=1")
    err = capsys.readouterr().err
    assert rc == 2
    assert "scenario.bogus" in err


def test_run_artifacts_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        rc = run_cli("run", "--config", TOY, "--seed", "7",
                     "--out", str(out), "--optimizer", "greedy")
        assert rc == 0
    for name in ("episode.csv", "summary.json", "resolved.toml"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_run_csv_layout_and_summary_recomputes(tmp_path):
    rc = run_cli("run", "--config", TOY, "--seed", "3", "--out", str(tmp_path))
    assert rc == 0
    header, rows = read_csv(tmp_path / "episode.csv")
    assert header == ["slot", "R_b", "R_c", "xi_star", "c1_ok", "reward"]
    assert [int(r["slot"]) for r in rows] == list(range(1, 21))

    summary = json.loads((tmp_path / "summary.json").read_text())
    n = len(rows)
    assert summary["slots"] == n
    for col, key in (("R_b", "mean_r_b"), ("R_c", "mean_r_c"),
                     ("xi_star", "mean_xi_star"), ("reward", "mean_reward")):
        recomputed = sum(float(r[col]) for r in rows) / n
        assert summary[key] == pytest.approx(recomputed, abs=1e-9)
    frac = sum(int(r["c1_ok"]) for r in rows) / n
    assert summary["c1_fraction"] == pytest.approx(frac, abs=1e-9)


def test_run_resolved_config_tracks_seed_as_user(tmp_path):
    run_cli("run", "--config", TOY, "--seed", "11", "--out", str(tmp_path))
    text = (tmp_path / "resolved.toml").read_text()
    assert "seed = 11  # user" in text


def test_run_with_cem_reports_objective(tmp_path):
    rc = run_cli("run", "--config", TOY, "--seed", "1", "--out", str(tmp_path),
                 "--optimizer", "cem", "--budget", "8", "--population", "4")
    assert rc == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert isinstance(summary["objective"], float)
    assert summary["budget"] == 8


def test_sweep_single_point_yields_one_row(tmp_path):
    rc = run_cli("sweep", "--config", TOY, "--param", "scenario.eps",
                 "--values", "0.1", "--seeds", "1", "--eval-episodes", "2",
                 "--out", str(tmp_path), "--workers", "1")
    assert rc == 0
    header, rows = read_csv(tmp_path / "sweep.csv")
    assert header == ["param", "mean_covert_rate", "ci95", "public_rate",
                      "feasible_frac"]
    assert len(rows) == 1


def test_sweep_row_order_and_grouping(tmp_path):
    rc = run_cli("sweep", "--config", TOY, "--param", "scenario.eps",
                 "--values", "0.05,0.2", "--seeds", "2", "--eval-episodes", "1",
                 "--out", str(tmp_path), "--workers", "1")
    assert rc == 0
    _, rows = read_csv(tmp_path / "sweep.csv")
    assert [r["param"] for r in rows] == ["0.05", "0.05", "0.2", "0.2"]
    meta = json.loads((tmp_path / "sweep.json").read_text())
    assert meta["values"] == [0.05, 0.2]
    assert len(meta["seed_averaged_covert_rate"]) == 2


def test_sweep_pool_matches_serial_bytes(tmp_path):
    outs = []
    for workers, name in (("1", "ser"), ("2", "par")):
        out = tmp_path / name
        rc = run_cli("sweep", "--config", TOY, "--param", "scenario.power_w",
                     "--values", "0.1,0.2", "--seeds", "1",
                     "--eval-episodes", "1", "--out", str(out),
                     "--workers", workers)
        assert rc == 0
        outs.append((out / "sweep.csv").read_bytes())
    assert outs[0] == outs[1]


def test_sweep_trend_assertion(tmp_path, capsys):
    # a power cut drops the covert rate under the fixed greedy baseline,
    # so the decreasing order violates non-decreasing and exits 3
    args = ("sweep", "--config", TOY, "--param", "scenario.power_w",
            "--seeds", "1", "--eval-episodes", "1", "--workers", "1")
    rc = run_cli(*args, "--values", "0.2,0.000002", "--out",
                 str(tmp_path / "bad"), "--assert-trend", "non-decreasing")
    assert rc == 3
    assert "trend violation" in capsys.readouterr().err
    rc = run_cli(*args, "--values", "0.2,0.000002", "--out",
                 str(tmp_path / "ok"), "--assert-trend", "non-increasing")
    assert rc == 0


def test_sweep_bad_param_exits_2_before_work(tmp_path, capsys):
    rc = run_cli("sweep", "--config", TOY, "--param", "scenario.nope",
                 "--values", "1,2", "--out", str(tmp_path))
    assert rc == 2
    assert "scenario.nope" in capsys.readouterr().err


def _pump_stdio(lines):
    proc = subprocess.run(
        [sys.executable, "-m", "frisim.cli", "serve", "--config", TOY],
        input="".join(ln + "\n" for ln in lines).encode(),
        capture_output=True, timeout=120)
    return proc


def test_serve_stdio_session():
    proc = _pump_stdio(['{"seq":1,"cmd":"hello"}', '{"seq":2,"cmd":"close"}'])
    assert proc.returncode == 0
    replies = [json.loads(ln) for ln in proc.stdout.splitlines()]
    assert replies[0]["version"] == "frisim/1"
    assert replies[1] == {"seq": 2, "ok": True}
    summary = json.loads(proc.stderr.splitlines()[-1])
    assert summary == {"errors": 0, "requests": 2}


def test_serve_tcp_session():
    proc = subprocess.Popen(
        [sys.executable, "-m", "frisim.cli", "serve", "--config", TOY,
         "--tcp", "0"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    try:
        announce = proc.stderr.readline().decode()
        port = int(announce.rsplit(" ", 1)[1])
        with socket.create_connection(("127.0.0.1", port), timeout=30) as sk:
            sk.sendall(b'{"seq":1,"cmd":"hello"}\n{"seq":2,"cmd":"close"}\n')
            data = sk.makefile("rb").readline()
        assert json.loads(data)["version"] == "frisim/1"
        assert proc.wait(timeout=60) == 0
    finally:
        proc.kill()
