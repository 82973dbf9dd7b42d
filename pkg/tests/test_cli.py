import csv
import json

import pytest

from core.config import VERSION
from permcover import PermcoverCLI, main


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for var in ("PERMCOVER_CACHE", "PERMCOVER_MAX_N", "PERMCOVER_WORKERS"):
        monkeypatch.delenv(var, raising=False)


@pytest.fixture
def run(tmp_path):
    def invoke(*argv):
        return main([*argv, "--no-log", "--cache-dir", str(tmp_path / "cache")])

    return invoke


def _read(path):
    with open(path) as f:
        return json.load(f)


def test_solve_exact_n3(run, tmp_path, capsys):
    out = tmp_path / "cert.json"
    assert run("solve", "--n", "3", "--method", "exact", "--out", str(out)) == 0
    doc = _read(out)
    assert doc["payload"]["size"] == 2
    assert doc["payload"]["status"] == "optimal"
    assert doc["version"] == VERSION
    assert doc["config"]["subcommand"] == "solve"
    assert doc["config"]["params"]["n"] == 3
    assert "status:" in capsys.readouterr().out


def test_second_solve_hits_the_cache(run, capsys):
    assert run("solve", "--n", "3") == 0
    capsys.readouterr()
    assert run("solve", "--n", "3") == 0
    assert "Cache hit" in capsys.readouterr().out


def test_quiet_suppresses_summary(run, capsys):
    assert run("solve", "--n", "2", "--method", "greedy", "--quiet") == 0
    assert capsys.readouterr().out == ""


def test_graph_audit_n1(run, tmp_path):
    out = tmp_path / "audit.json"
    assert run("graph", "--n", "1", "--audit", "--out", str(out)) == 0
    payload = _read(out)["payload"]
    assert payload["max_J"] == 0 and payload["violations"] == []


def test_graph_audit_n3_reports_violation(run, tmp_path, capsys):
    out = tmp_path / "audit.json"
    assert run("graph", "--n", "3", "--audit", "--out", str(out)) == 1
    payload = _read(out)["payload"]
    assert payload["max_C"] == 4
    assert payload["adjacent_swap_iff_holds"] is False
    assert "violation" in capsys.readouterr().err


def test_graph_summary(run, tmp_path):
    out = tmp_path / "graph.json"
    assert run("graph", "--n", "3", "--out", str(out)) == 0
    payload = _read(out)["payload"]
    assert (payload["n_patterns"], payload["n_covers"]) == (6, 24)
    assert all(payload["identities"].values())


def test_graph_dot_export(run, tmp_path):
    pytest.importorskip("pydot")
    dot = tmp_path / "g.dot"
    assert run("graph", "--n", "2", "--dot", str(dot)) == 0
    text = dot.read_text()
    assert "lightblue" in text and "lightgreen" in text


def test_graph_dot_limit(run, tmp_path):
    assert run("graph", "--n", "4", "--dot", str(tmp_path / "g.dot")) == 3


def test_gap_smoke(run, tmp_path):
    out = tmp_path / "gap.json"
    assert run("gap", "--n", "2", "--lambda-target", "0.5", "--trials", "64",
               "--seed", "0", "--out", str(out)) == 0
    doc = _read(out)
    payload = doc["payload"]
    assert payload["n"] == 2 and payload["trials"] == 64
    assert all(k.isdigit() for k in payload["empirical_pmf"])
    assert sum(payload["empirical_pmf"].values()) == pytest.approx(1.0)
    assert payload["lambda_exact"] == pytest.approx(0.5)
    assert "tv_to_exact" in payload
    assert any("64 trials" in w for w in doc["warnings"])


def test_gap_needs_one_location(run):
    assert run("gap", "--n", "2", "--K", "0", "--p", "0.1") == 2


def test_replay_reproduces_payload(run, tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    assert run("gap", "--n", "2", "--p", "0.3", "--trials", "500",
               "--seed", "4", "--out", str(first)) == 0
    assert main(["--replay", str(first), "--out", str(second), "--no-log"]) == 0
    assert _read(first)["payload"] == _read(second)["payload"]
    assert _read(second)["config"]["params"] == _read(first)["config"]["params"]


def test_replay_of_missing_file(tmp_path):
    assert main(["--replay", str(tmp_path / "nope.json"), "--no-log"]) == 1


def test_threshold_csv(run, tmp_path):
    out = tmp_path / "sweep.csv"
    assert run("threshold", "--n", "3", "--steps", "5", "--trials", "50",
               "--seed", "0", "--out", str(out)) == 0
    with open(out, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["p", "covers", "trials", "phat", "ci_lo", "ci_hi", "lambda_exact"]
    assert len(rows) == 6
    phats = [float(r[3]) for r in rows[1:]]
    assert phats == sorted(phats)


def test_threshold_rejects_inverted_range(run):
    assert run("threshold", "--n", "3", "--pmin", "0.5", "--pmax", "0.1") == 2


def test_bounds_with_cached_certificate(run, tmp_path):
    assert run("solve", "--n", "3") == 0
    out = tmp_path / "bounds.csv"
    assert run("bounds", "--nmin", "1", "--nmax", "4", "--out", str(out)) == 0
    with open(out, newline="") as f:
        rows = list(csv.DictReader(f))
    assert [r["n"] for r in rows] == ["1", "2", "3", "4"]
    n3 = rows[2]
    assert n3["pigeonhole_lower"] == "2"
    assert float(n3["thm2_upper"]) == pytest.approx(4.599, abs=1e-3)
    assert n3["thm3_upper"] == ""
    assert n3["best_known"] == "2"
    assert rows[3]["best_known"] == ""
    assert [int(r["pigeonhole_lower"]) for r in rows[:2]] == [1, 1]


def test_lambda_shorthand(run, tmp_path):
    out = tmp_path / "lam.json"
    assert run("lambda", "--n", "3", "--lambda", "2", "--seed", "7", "--out", str(out)) == 0
    payload = _read(out)["payload"]
    assert payload["method"] == "lambda-sample"
    assert payload["lambda"] == 2 and payload["seed"] == 7
    assert payload["size"] >= 3


def test_alteration_needs_lambda_one(run):
    assert run("solve", "--n", "3", "--method", "alteration", "--lambda", "2") == 2


def test_unknown_flag_is_usage_error(run, capsys):
    assert run("solve", "--n", "3", "--bogus") == 2
    assert "usage" in capsys.readouterr().err


def test_every_plugin_loads(capsys):
    cli = PermcoverCLI()
    assert set(cli.modules) == {"solve", "lambda", "graph", "threshold", "gap", "bounds"}
    assert "Failed to load" not in capsys.readouterr().err


def test_missing_command(capsys):
    assert main(["--no-log"]) == 2
    assert "command is required" in capsys.readouterr().err


def test_max_n_is_a_resource_limit(run):
    assert run("solve", "--n", "3", "--max-n", "2") == 3


def test_global_flags_after_the_command(run, tmp_path):
    out = tmp_path / "cert.json"
    assert run("solve", "--n", "3", "--workers", "2", "--out", str(out)) == 0
    assert _read(out)["config"]["workers"] == 2
