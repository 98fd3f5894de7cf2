import copy
import json
from pathlib import Path

import pytest

from b5groam.errors import NoContributions, ScenarioInvalid, UnexpectedVerdict, UnknownBackend
from b5groam.harness import (
    ADVERSARIES,
    BenchReport,
    Scenario,
    audit_artifacts,
    bench_latency,
    bench_layers,
    bench_prove,
    keys_setup,
    run_scenario,
)

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def _load(name):
    return json.loads((SCENARIOS / name).read_text())


def test_honest_session_pays_vmno():
    res = run_scenario(SCENARIOS / "honest.json")
    assert res.ok
    (v,) = res.verdicts
    assert (v.outcome, v.paid) == ("settled", 1160)
    assert res.ledger.balance(res.vmno) == 1160
    assert res.ledger.balance(res.hmno) == 5000 - 1160


@pytest.mark.parametrize("layer_file", ["l1_adversaries.json", "l2_adversaries.json"])
def test_adversary_matrix(layer_file):
    res = run_scenario(SCENARIOS / layer_file)
    by_kind = {v.adversary: v for v in res.verdicts}
    assert set(ADVERSARIES) <= set(by_kind)
    assert by_kind[None].outcome == "settled" and by_kind[None].paid == 1160
    for kind in ("inflate_usage", "forge_total", "tamper_proof_bytes", "replay_commitment"):
        assert by_kind[kind].outcome == "rejected", kind
        assert by_kind[kind].paid == 0
    # the one legitimate settle succeeds, the reuse does not pay twice
    reuse = dict(by_kind["reuse_proof"].attempts)
    assert reuse["first_settle"] == "accepted" and reuse["reused_proof"] != "accepted"
    inflate = dict(by_kind["inflate_usage"].attempts)
    assert inflate["honest_prover"] == "HashMismatch"
    assert inflate["forced_witness"] == "UnsatisfiedConstraints"


def test_determinism_and_report_bytes():
    a = run_scenario(SCENARIOS / "l2_adversaries.json")
    b = run_scenario(SCENARIOS / "l2_adversaries.json")
    assert a.digest == b.digest and a.report_bytes() == b.report_bytes()
    c = run_scenario(SCENARIOS / "l2_adversaries.json", seed="ff")
    assert c.ok


def test_unknown_fields_rejected():
    data = _load("honest.json")
    for mutate in (
        lambda d: d.update(extra=1),
        lambda d: d["sessions"][0].update(bogus=True),
        lambda d: d["sessions"][0].update(adversary={"kind": "bribe"}),
        lambda d: d.update(version=2),
        lambda d: d["sessions"][0]["usage"].update(n_sms=-1),
    ):
        bad = copy.deepcopy(data)
        mutate(bad)
        with pytest.raises(ScenarioInvalid):
            Scenario.from_json(bad)


def test_reference_checks():
    data = _load("l1_adversaries.json")
    bad = copy.deepcopy(data)
    bad["sessions"][3]["adversary"]["source"] = "s9"
    with pytest.raises(ScenarioInvalid):
        Scenario.from_json(bad)
    bad = copy.deepcopy(data)
    bad["sessions"][1]["adversary"] = {"kind": "inflate_usage"}
    with pytest.raises(ScenarioInvalid):
        Scenario.from_json(bad)


def test_unexpected_verdict_surfaces(monkeypatch):
    from b5groam import harness

    monkeypatch.setattr(harness.Verdict, "expected", property(lambda self: self.adversary is None))
    with pytest.raises(UnexpectedVerdict) as ei:
        run_scenario(SCENARIOS / "l1_adversaries.json")
    assert not ei.value.result.ok


def test_keys_setup(tmp_path):
    desc = {"rates": {"r_sms": 1, "r_mb": 2, "r_voice": 5}}
    a = keys_setup(3, "abcd", desc, tmp_path / "a")
    b = keys_setup(3, "abcd", desc, tmp_path / "b")
    c = keys_setup(3, "abce", desc, tmp_path / "c")
    assert a.vk_digest == b.vk_digest != c.vk_digest
    assert a.verification_key.read_bytes() == b.verification_key.read_bytes()
    assert a.params.read_bytes()[:4] == b"B5GP"
    with pytest.raises(NoContributions):
        keys_setup(0, "abcd", desc, tmp_path / "d")


def test_bench_prove_reference_rows():
    for name, (t, mem, gas) in {"plonk": (0.75, 310, 270_000), "ultrahonk": (0.17, 90, 380_000)}.items():
        rep = bench_prove(name)
        (row,) = rep.rows
        assert (row["prove_time_s"][0], row["prove_memory_mb"][0], row["verify_gas"][0]) == (t, mem, gas)
        assert {src for _, src in row.values()} <= {"paper", "config"}
    with pytest.raises(UnknownBackend):
        bench_prove("stark")


def test_bench_prove_measured():
    rep = bench_prove("groth16", 2)
    (row,) = rep.rows
    assert row["prove_time_s"][1] == "measured" and row["prove_time_s"][0] > 0
    assert row["prove_memory_mb"][1] == "measured"
    assert row["verify_gas"] == (230_000, "paper")
    assert row["proof_bytes"] == (128, "measured")


def test_bench_layers_examples(tmp_path):
    rep = bench_layers([60, 1], {60: 60, 1: 1})
    r60, r1 = rep.table()
    assert [r60[k] for k in ("batches", "commit", "prove", "execute", "total_l2", "total_l1")] == [
        1, 205_907, 83_676, 99_166, 388_749, 15_636_180]
    assert r60["reduction_pct"] >= 96
    assert (r1["total_l2"], r1["total_l1"]) == (388_749, 260_603)
    assert r1["reduction_pct"] < 0
    sidecar = rep.write(tmp_path / "layers.csv")
    meta = json.loads(sidecar.read_text())
    for row in meta["rows"]:
        assert all(cell["source"] in ("measured", "paper", "config") for cell in row.values())
    header = (tmp_path / "layers.csv").read_text().splitlines()[0].split(",")
    assert header[:2] == ["txs", "txs_source"]
    with pytest.raises(ValueError):
        bench_layers([])


def test_bench_latency_shape():
    rep = bench_latency([1, 500, 1000])
    one, a, b = rep.table()
    assert one["median_latency_s"] == pytest.approx(0.1, abs=0.011)
    assert 98 <= a["throughput_tps"] <= 100 and 98 <= b["throughput_tps"] <= 100
    over = bench_latency([500, 1000], offered_rate=200).table()
    # past the cap the queue grows, so median latency roughly doubles with load
    assert over[1]["median_latency_s"] / over[0]["median_latency_s"] == pytest.approx(2, rel=0.15)
    with pytest.raises(ValueError):
        bench_latency([0])


def test_bench_report_cells_are_labeled():
    rep = BenchReport("x", ["a"], [{"a": (1, "measured")}])
    assert rep.sidecar()["rows"][0]["a"] == {"value": 1, "source": "measured"}


def test_privacy_audit_on_run_artifacts(tmp_path):
    sentinels = [7_340_033, 918_273_645, 4_111_222]
    data = _load("honest.json")
    data["actors"]["hmno"]["balance"] = 10**12
    data["sessions"][0]["usage"] = {"n_sms": sentinels[0], "n_mb": sentinels[1], "n_min": sentinels[2]}
    data["sessions"][0]["escrow"] = 10**11
    res = run_scenario(data)
    assert res.ok
    res.ledger.write_log(tmp_path / "log.jsonl")
    (tmp_path / "report.json").write_bytes(res.report_bytes())
    (tmp_path / "state.json").write_text(res.ledger.snapshot_json())
    assert audit_artifacts(sorted(tmp_path.iterdir()), sentinels) == []
    # the audit itself detects a planted leak
    (tmp_path / "leak.txt").write_text(f"n_mb={sentinels[1]}")
    assert audit_artifacts([tmp_path / "leak.txt"], sentinels) == [(str(tmp_path / "leak.txt"), sentinels[1])]


def test_inflation_past_metric_range_is_rejected():
    top = (1 << 32) - 1
    data = _load("honest.json")
    data["actors"]["hmno"]["balance"] = 1 << 40
    data["sessions"] = [{"id": "x", "usage": {"n_sms": top, "n_mb": 1, "n_min": 1}, "escrow": 1 << 36,
                         "adversary": {"kind": "inflate_usage", "delta_sms": 3}}]
    (v,) = run_scenario(data).verdicts
    assert v.outcome == "rejected" and v.paid == 0
    assert dict(v.attempts) == {"honest_prover": "RangeViolation", "forced_witness": "UnsatisfiedConstraints"}
