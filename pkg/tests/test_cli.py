import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from b5groam.cli import main

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


@pytest.fixture
def runner():
    return CliRunner()


def test_run_honest(runner, tmp_path):
    res = runner.invoke(main, ["run", "--scenario", str(SCENARIOS / "honest.json"), "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert "state digest: 0x" in res.output
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["ok"] and report["verdicts"][0]["paid"] == 1160
    assert (tmp_path / "ledger.jsonl").exists()


def test_run_l2_writes_manifests(runner, tmp_path):
    res = runner.invoke(main, ["run", "--scenario", str(SCENARIOS / "l2_adversaries.json"), "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert list(tmp_path.glob("batch_*.json"))
    assert "BAD" not in res.output


def test_invalid_scenario_exit_2(runner, tmp_path):
    bad = json.loads((SCENARIOS / "honest.json").read_text())
    bad["typo_field"] = 1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert runner.invoke(main, ["run", "--scenario", str(path)]).exit_code == 2
    path.write_text("{not json")
    assert runner.invoke(main, ["run", "--scenario", str(path)]).exit_code == 2
    assert runner.invoke(main, ["run", "--scenario", str(tmp_path / "missing.json")]).exit_code == 2


def test_security_violation_exit_3(runner, monkeypatch):
    from b5groam import harness

    monkeypatch.setattr(harness.Verdict, "expected", property(lambda self: False))
    res = runner.invoke(main, ["run", "--scenario", str(SCENARIOS / "honest.json")])
    assert res.exit_code == 3


def test_keys_setup_cli(runner, tmp_path):
    args = ["keys", "setup", "--contributors", "3", "--seed", "c0ffee", "--circuit", str(SCENARIOS / "circuit.json")]
    a = runner.invoke(main, args + ["--out", str(tmp_path / "a")])
    b = runner.invoke(main, args + ["--out", str(tmp_path / "b")])
    assert a.exit_code == 0, a.output
    digest = [l for l in a.output.splitlines() if l.startswith("vk digest")]
    assert digest and digest == [l for l in b.output.splitlines() if l.startswith("vk digest")]
    zero = runner.invoke(main, ["keys", "setup", "--contributors", "0", "--seed", "00",
                                "--circuit", str(SCENARIOS / "circuit.json"), "--out", str(tmp_path / "z")])
    assert zero.exit_code != 0 and "contribut" in zero.output.lower()


def test_bench_commands(runner, tmp_path):
    res = runner.invoke(main, ["bench", "prove", "--backend", "plonk"])
    assert res.exit_code == 0 and "0.75" in res.output
    assert runner.invoke(main, ["bench", "prove", "--backend", "nope"]).exit_code == 2
    out = tmp_path / "layers.csv"
    res = runner.invoke(main, ["bench", "layers", "--txs", "60", "--batch-size", "60", "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert "388749" in res.output and out.exists() and Path(str(out) + ".json").exists()
    res = runner.invoke(main, ["bench", "latency", "--loads", "500"])
    assert res.exit_code == 0 and "100.0" in res.output
    assert runner.invoke(main, ["bench", "layers", "--txs", "a,b"]).exit_code == 2
