import json

import pytest

from strong_nibble.cli import main
from strong_nibble.graph_core import load_graph


def gen(tmp_path, name, *args):
    out = tmp_path / name
    assert main(["generate", *args, "--out", str(out)]) == 0
    return out


def test_generate_cycle_stdout(capsys):
    assert main(["generate", "--family", "cycle", "--n", "6"]) == 0
    text = capsys.readouterr().out
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    assert len(lines) == 6


def test_generate_blowup_file(tmp_path):
    p = gen(tmp_path, "g.el", "--family", "c5-blowup", "--t", "2")
    assert load_graph(p).m == 20


def test_generate_parity_error(capsys):
    assert main(["generate", "--family", "random-regular", "--n", "5", "--d", "3", "--seed", "1"]) == 2
    assert "even" in capsys.readouterr().err


def test_generate_missing_param(capsys):
    assert main(["generate", "--family", "projective"]) == 2
    assert "--q" in capsys.readouterr().err


def test_generate_prints_drawn_seed(tmp_path, capsys):
    gen(tmp_path, "r.el", "--family", "random-regular", "--n", "10", "--d", "3")
    assert "seed=" in capsys.readouterr().err


def test_color_c6(tmp_path):
    g = gen(tmp_path, "c6.el", "--family", "cycle", "--n", "6")
    out = tmp_path / "run"
    assert main(["color", str(g), "--seed", "1", "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["verified"] and summary["colors_used"] <= 5
    assert summary["oracle_value"] == 3
    assert summary["schema"] == "strong-nibble/summary/v1"
    assert summary["input_hash"].startswith("sha256:")
    for key in ("t", "epsilon", "gamma", "mode", "seed", "retry_budget", "k_override"):
        assert key in summary["run_config"]
    assert (out / "coloring.txt").exists() and (out / "trace.csv").exists()


def test_color_blowup(tmp_path):
    g = gen(tmp_path, "b.el", "--family", "c5-blowup", "--t", "2")
    out = tmp_path / "run"
    assert main(["color", str(g), "--seed", "3", "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["verified"] and summary["colors_used"] >= 20
    assert summary["oracle_gap"] == summary["colors_used"] - 20


def test_color_deterministic(tmp_path):
    g = gen(tmp_path, "h.el", "--family", "projective", "--q", "3")
    for run in ("a", "b"):
        assert main(["color", str(g), "--seed", "9", "--out", str(tmp_path / run)]) == 0
    for name in ("coloring.txt", "trace.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_color_k_override(tmp_path):
    g = gen(tmp_path, "h.el", "--family", "projective", "--q", "2")
    out = tmp_path / "run"
    assert main(["color", str(g), "--seed", "2", "--k-override", "40", "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["k_budget"] == 40 and summary["verified"]


def test_color_bad_file(tmp_path, capsys):
    p = tmp_path / "bad.el"
    p.write_text("0 1\n2 2\n")
    assert main(["color", str(p), "--out", str(tmp_path / "x")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_color_missing_file(tmp_path):
    assert main(["color", str(tmp_path / "nope.el"), "--out", str(tmp_path / "x")]) == 2


def test_analyze_heawood(tmp_path):
    g = gen(tmp_path, "h.el", "--family", "projective", "--q", "2")
    out = tmp_path / "report.json"
    assert main(["analyze", str(g), "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert [c["condition"] for c in data["conditions"]] == ["1", "2a", "2b", "2c", "3a", "3b"]


def test_analyze_empty_graph(tmp_path, capsys):
    p = tmp_path / "empty.el"
    p.write_text("# nothing\n")
    assert main(["analyze", str(p)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["overall"] and all("vacuous" in c["note"] for c in data["conditions"])


def test_schedule_open_exits_one(tmp_path):
    out = tmp_path / "sched"
    assert main(["schedule", "--delta", str(2 ** 40), "--out", str(out)]) == 1
    checks = json.loads((out / "checks.json").read_text())
    assert checks["closed"] is False and checks["ok"] is False
    assert (out / "trajectory.csv").read_text().startswith("i,L,T,keep,Q,X,B,r")


def test_schedule_rejects_tiny_delta(capsys):
    assert main(["schedule", "--delta", "2"]) == 2
    assert "ln" in capsys.readouterr().err


def test_oracle_c6(tmp_path, capsys):
    g = gen(tmp_path, "c6.el", "--family", "cycle", "--n", "6")
    cert = tmp_path / "cert.txt"
    assert main(["oracle", str(g), "--certificate", str(cert)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["value"] == 3 and data["certificate_path"] == str(cert)
    assert cert.exists()


def test_bad_flag_exit_code():
    assert main(["color"]) == 2
