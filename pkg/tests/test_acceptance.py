"""Acceptance criteria; each test prints one PASS/FAIL line and asserts at the stated tolerance."""

import json
import random
import statistics
import time
from pathlib import Path

import pytest

from b5groam.cdr import UsageRecord, tee_commit
from b5groam.circuit import METRIC_BITS, RateSchedule, compute_total, synthesize_witness
from b5groam.groth16 import Proof, prove, verify, verify_bytes
from b5groam.harness import (
    REFERENCE_LAYERS,
    _template,
    agreement_keys,
    audit_artifacts,
    bench_latency,
    bench_layers,
    bench_prove,
    run_scenario,
)
from b5groam.ledger import Ledger
from b5groam.poseidon import default_params, hash_ints
from b5groam.rollup import effective_throughput

from conftest import load_fixture

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
RATES = {"r_sms": 1, "r_mb": 2, "r_voice": 5}

pytestmark = pytest.mark.slow


@pytest.fixture
def verdict(capsys):
    def emit(n, name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {name} :: {detail}")
        assert ok, detail

    return emit


# -- poisoning campaign, shared by criteria 1 and 7 ----------------------------

CHUNKS, PER_CHUNK = 40, 50  # half honest, half adversarial per chunk


def _chunk(idx):
    rng = random.Random(1000 + idx)
    sessions = []
    for i in range(PER_CHUNK):
        if rng.random() < 0.05:
            usage = {k: rng.choice([0, (1 << METRIC_BITS) - 1]) for k in ("n_sms", "n_mb", "n_min")}
        else:
            usage = {"n_sms": rng.randrange(1000), "n_mb": rng.randrange(10**6), "n_min": rng.randrange(10**4)}
        s = {"id": f"c{idx}s{i}", "usage": usage, "escrow": 1 << 40}
        if i % 2:
            if i % 4 == 1:
                key = rng.choice(["delta_sms", "delta_mb", "delta_min"])
                s["adversary"] = {"kind": "inflate_usage", key: rng.randrange(1, 10**4)}
            else:
                s["adversary"] = {"kind": "forge_total", "delta": rng.randrange(1, 10**9)}
        sessions.append(s)
    return {"version": 1, "seed": "campaign", "layer": "L1", "rates": RATES,
            "actors": {"hmno": {"balance": PER_CHUNK << 40}, "vmno": {"balance": 0}}, "sessions": sessions}


@pytest.fixture(scope="module")
def campaign():
    t0 = time.perf_counter()
    verdicts = []
    for idx in range(CHUNKS):
        verdicts.extend(run_scenario(_chunk(idx), strict=False).verdicts)
    return verdicts, time.perf_counter() - t0


def test_c1_poisoning_resistance(campaign, verdict):
    verdicts, elapsed = campaign
    honest = [v for v in verdicts if v.adversary is None]
    attacks = [v for v in verdicts if v.adversary in ("inflate_usage", "forge_total")]
    leaked = [v for v in attacks if v.outcome != "rejected" or v.paid or not v.expected]
    settled = sum(v.outcome == "settled" for v in honest)
    ok = len(honest) >= 1000 and len(attacks) >= 1000 and not leaked and settled == len(honest) and elapsed < 600
    verdict(1, "poisoning resistance", ok,
            f"{len(attacks)} attacks, {len(leaked)} succeeded; {settled}/{len(honest)} honest settled; {elapsed:.0f} s")


# -- privacy surface --------------------------------------------------------------

SENTINELS = [3_141_592, 27_182_818, 1_618_033, 4_669_201, 2_502_907, 1_414_213]


def _sentinel_scenario(layer):
    data = json.loads((SCENARIOS / f"{layer.lower()}_adversaries.json").read_text())
    data["actors"]["hmno"]["balance"] = 1 << 50
    for i, s in enumerate(data["sessions"]):
        base = SENTINELS[i % len(SENTINELS)]
        s["usage"] = {"n_sms": base, "n_mb": base + 17 + i, "n_min": base + 29 + i}
        s["escrow"] = 1 << 40
    return data, {v for s in data["sessions"] for v in s["usage"].values()}


def test_c2_privacy_surface(tmp_path, verdict):
    paths, sentinels = [], set()
    for layer in ("L1", "L2"):
        data, used = _sentinel_scenario(layer)
        sentinels |= used
        res = run_scenario(data)
        d = tmp_path / layer
        d.mkdir()
        res.ledger.write_log(d / "ledger.jsonl")
        (d / "report.json").write_bytes(res.report_bytes())
        (d / "state.json").write_text(res.ledger.snapshot_json())
        if res.sequencer is not None:
            for b in res.sequencer.batches:
                b.write_manifest(d / f"batch_{b.batch_id}.json")
        paths.extend(sorted(d.iterdir()))
    leaks = audit_artifacts(paths, sorted(sentinels))
    verdict(2, "privacy surface", not leaks and len(paths) >= 7,
            f"{len(paths)} artifacts, {len(sentinels)} sentinels, {len(leaks)} leaks")


# -- gas fidelity ---------------------------------------------------------------------


def test_c3_gas_model_fidelity(verdict):
    rows = {r["txs"]: r for r in bench_layers([60, 100, 200, 500]).table()}
    problems = []
    for n, ref in REFERENCE_LAYERS.items():
        if rows[n]["total_l1"] != ref["total_l1"]:
            problems.append(f"L1 {n}: {rows[n]['total_l1']} != {ref['total_l1']}")
        if rows[n]["reduction_pct"] < 96:
            problems.append(f"reduction {n}: {rows[n]['reduction_pct']}")
    r60 = rows[60]
    for k in ("commit", "prove", "execute", "total_l2"):
        if r60[k] != REFERENCE_LAYERS[60][k]:
            problems.append(f"row 60 {k}: {r60[k]} != {REFERENCE_LAYERS[60][k]}")
    for n in (100, 200, 500):
        dev = abs(rows[n]["total_l2"] - REFERENCE_LAYERS[n]["total_l2"]) / REFERENCE_LAYERS[n]["total_l2"]
        if dev >= 0.01:
            problems.append(f"L2 {n}: {rows[n]['total_l2']} vs {REFERENCE_LAYERS[n]['total_l2']} ({100 * dev:.3f}%)")
    verdict(3, "gas model fidelity", not problems, "; ".join(problems) or "all rows within tolerance")


def test_c4_verification_gas(keys, honest, verdict):
    _, pk, vk = keys
    _, com, pub, _, proof = honest
    led = Ledger()
    h, v = led.create_account(2000), led.create_account(0)
    ag = led.deploy_agreement(h, v, RateSchedule(1, 2, 5), vk.digest(), pk.cs.descriptor_digest())
    led.lock_escrow(ag, "s", 2000)
    led.submit_commitment(ag, "s", com)
    res = led.settle(ag, "s", pub.total, proof, vk)
    receipt = led.receipts[-1]
    ok = res.verify_gas == 230_000 and receipt.components["verify"] == 230_000
    verdict(4, "verification gas", ok, f"verify component {receipt.components['verify']}")


def test_c5_throughput_model(verdict):
    got = effective_throughput(60, 120)
    verdict(5, "effective throughput", got == 7200, f"effective_throughput(60, 120) = {got}")


def test_c6_latency_shape(verdict):
    rows = bench_latency([500, 1000, 2500, 5000], tps_cap=100).table()
    tps = [r["throughput_tps"] for r in rows]
    med = [r["median_latency_s"] for r in rows]
    spread = (max(med) - min(med)) / min(med)
    ok = all(98 <= t <= 100 for t in tps) and spread < 0.20
    verdict(6, "latency shape", ok, f"throughput {tps}; median latency {med}; spread {100 * spread:.2f}%")


# -- proof-system properties -------------------------------------------------------


def test_c7_proof_system(campaign, verdict):
    honest = [v for v in campaign[0] if v.adversary is None]
    completeness = sum(v.outcome == "settled" for v in honest) / len(honest)

    rates, pk, vk, com, total, proof_hex = _template()
    w, pub = synthesize_witness(UsageRecord(10, 500, 30), rates, com)
    raw = bytes.fromhex(proof_hex[2:])
    rng = random.Random(7)
    accepted = 0
    for _ in range(1000):
        buf = bytearray(raw)
        bit = rng.randrange(8 * len(buf))
        buf[bit // 8] ^= 1 << (bit % 8)
        accepted += verify_bytes(vk, [pub.total, pub.h_cdr], bytes(buf))

    top = (1 << METRIC_BITS) - 1
    extremes = [UsageRecord(0, 0, 0), UsageRecord(10, 500, 30), UsageRecord(top, top, top)]
    sizes, medians = set(), []
    for rec in extremes:
        c = tee_commit(rec)
        ww, pp = synthesize_witness(rec, rates, c)
        p = prove(pk, pp, ww, random.Random(1))
        sizes.add(len(p.to_bytes()))
        times = []
        for _ in range(100):
            t = time.perf_counter()
            assert verify(vk, pp, p)
            times.append(time.perf_counter() - t)
        medians.append(statistics.median(times))
    spread = (max(medians) - min(medians)) / min(medians)
    row = bench_prove("groth16", 3).rows[0]
    ok = (completeness == 1.0 and len(honest) >= 1000 and accepted == 0 and len(sizes) == 1 and spread < 0.20
          and row["prove_time_s"][1] == "measured")
    verdict(7, "proof-system properties", ok,
            f"completeness {completeness:.3f} over {len(honest)}; tamper accepted {accepted}/1000; "
            f"proof sizes {sorted(sizes)}; verify spread {100 * spread:.2f}%; measured prove {row['prove_time_s'][0]} s")


def test_c8_oracle_equivalence(verdict):
    mismatches = 0
    count = 0
    for t in (4, 5):
        params = default_params(t)
        for v in load_fixture(f"poseidon_golden_t{t}.json"):
            count += 1
            mismatches += hash_ints([int(x, 16) for x in v["inputs"]], params) != int(v["output"], 16)
    rng = random.Random(8)
    bad_totals = 0
    for _ in range(10_000):
        u = [rng.randrange(1 << METRIC_BITS) for _ in range(3)]
        r = [rng.randrange(1 << 32) for _ in range(3)]
        direct = u[0] * r[0] + u[1] * r[1] + u[2] * r[2]
        bad_totals += compute_total(UsageRecord(*u), RateSchedule(*r)) != direct
    verdict(8, "oracle equivalence", mismatches == 0 and bad_totals == 0 and count > 0,
            f"poseidon {count - mismatches}/{count} golden; compute_total {10_000 - bad_totals}/10000")


def test_c9_determinism(verdict):
    details, ok = [], True
    for name in ("l1_adversaries.json", "l2_adversaries.json"):
        a = run_scenario(SCENARIOS / name)
        b = run_scenario(SCENARIOS / name)
        same = a.digest == b.digest and a.report_bytes() == b.report_bytes()
        ok &= same
        details.append(f"{name}: {'identical' if same else 'DIFFERENT'}")
    verdict(9, "determinism", ok, "; ".join(details))
