import json
import threading

import pytest
from hypothesis import settings
from hypothesis import strategies as st
from hypothesis.stateful import RuleBasedStateMachine, invariant, precondition, rule

from b5groam.cdr import UsageRecord, tee_commit
from b5groam.circuit import RateSchedule, build_constraints
from b5groam.errors import (
    AlreadyCommitted,
    InsufficientBalance,
    InsufficientEscrow,
    LedgerError,
    NotACommitment,
    ProofInvalid,
    UnknownAccount,
    UnknownAgreement,
    VkMismatch,
    WrongPhase,
)
from b5groam.groth16 import keygen
from b5groam.ledger import GasSchedule, LatencyModel, Ledger

from conftest import RATES


@pytest.fixture
def world(keys):
    _, pk, vk = keys
    led = Ledger()
    h = led.create_account(5000)
    v = led.create_account(0)
    ag = led.deploy_agreement(h, v, RATES, vk.digest(), pk.cs.descriptor_digest())
    return led, h, v, ag


def _commit(led, ag, sid, escrow, rec=UsageRecord(10, 500, 30)):
    led.lock_escrow(ag, sid, escrow)
    led.submit_commitment(ag, sid, tee_commit(rec))


def test_deploy_round_trip_and_uniqueness(world, keys):
    led, h, v, ag = world
    _, pk, vk = keys
    assert led.agreements[ag].rates == RATES
    assert led.agreements[ag].vk_digest == vk.digest()
    again = led.deploy_agreement(h, v, RATES, vk.digest(), pk.cs.descriptor_digest())
    assert again != ag
    with pytest.raises(UnknownAccount):
        led.deploy_agreement("0x" + "00" * 20, v, RATES, vk.digest(), pk.cs.descriptor_digest())
    assert len(bytes.fromhex(ag[2:])) == 20


def test_lock_escrow_examples(keys):
    _, pk, vk = keys
    led = Ledger()
    h, v = led.create_account(1000), led.create_account(0)
    ag = led.deploy_agreement(h, v, RATES, vk.digest(), pk.cs.descriptor_digest())
    led.lock_escrow(ag, "s", 400)
    assert led.balance(h) == 600 and led.session(ag, "s").escrow == 400
    with pytest.raises(WrongPhase):
        led.lock_escrow(ag, "s", 1)
    before = led.state_digest()
    with pytest.raises(InsufficientBalance):
        led.lock_escrow(ag, "t", 601)
    assert led.state_digest() == before
    with pytest.raises(UnknownAgreement):
        led.lock_escrow("0x" + "ab" * 20, "s", 1)


def test_submit_commitment_examples(world):
    led, h, v, ag = world
    com = tee_commit(UsageRecord(1, 2, 3))
    led.authorize(ag, "early")
    with pytest.raises(WrongPhase):
        led.submit_commitment(ag, "early", com)
    with pytest.raises(WrongPhase):
        led.submit_commitment(ag, "never-opened", com)
    led.lock_escrow(ag, "s", 100)
    led.submit_commitment(ag, "s", com)
    assert led.session(ag, "s").phase == "Committed"
    with pytest.raises(AlreadyCommitted):
        led.submit_commitment(ag, "s", tee_commit(UsageRecord(9, 9, 9)))
    assert led.session(ag, "s").h_cdr == com.to_hex()


def test_raw_values_are_not_commitments(world):
    led, h, v, ag = world
    led.lock_escrow(ag, "s", 100)
    for raw in (5, tee_commit(UsageRecord(1, 2, 3)).h_cdr, "0x05"):
        with pytest.raises(NotACommitment):
            led.submit_commitment(ag, "s", raw)


def test_honest_settlement(world, keys, honest):
    led, h, v, ag = world
    _, _, vk = keys
    _, _, pub, _, proof = honest
    _commit(led, ag, "s", 2000)
    res = led.settle(ag, "s", pub.total, proof, vk)
    assert (res.paid, res.refund) == (1160, 840)
    assert led.balance(v) == 1160 and led.balance(h) == 5000 - 1160
    assert led.session(ag, "s").phase == "Settled" and led.session(ag, "s").paid == 1160
    assert res.gas == 260_603 and res.verify_gas == 230_000
    with pytest.raises(WrongPhase):
        led.settle(ag, "s", pub.total, proof, vk)


def test_cross_session_proof_rejected_with_gas(world, keys, honest):
    led, h, v, ag = world
    _, _, vk = keys
    _, _, pub, _, proof = honest
    _commit(led, ag, "other", 2000, UsageRecord(10, 501, 30))
    before = led.state_digest()
    n = len(led.log)
    with pytest.raises(ProofInvalid):
        led.settle(ag, "other", pub.total, proof, vk)
    assert led.state_digest() == before
    assert led.session(ag, "other").phase == "Committed"
    assert led.log[n]["payload"]["status"] == "rejected" and led.log[n]["gas"] == 260_603


def test_vk_mismatch(world, keys, honest):
    led, h, v, ag = world
    pp, _, _ = keys
    _, vk_other = keygen(pp, build_constraints(RateSchedule(1, 2, 6)), seed=b"x")
    _, _, pub, _, proof = honest
    _commit(led, ag, "s", 2000)
    n = len(led.log)
    with pytest.raises(VkMismatch):
        led.settle(ag, "s", pub.total, proof, vk_other)
    assert len(led.log) == n


def test_underfunded_then_top_up(world, keys, honest):
    led, h, v, ag = world
    _, _, vk = keys
    _, _, pub, _, proof = honest
    _commit(led, ag, "s", 1000)
    with pytest.raises(InsufficientEscrow):
        led.settle(ag, "s", pub.total, proof, vk)
    assert led.session(ag, "s").phase == "Committed" and led.balance(v) == 0
    led.top_up_escrow(ag, "s", 200)
    assert led.settle(ag, "s", pub.total, proof, vk).refund == 40


def test_malformed_proofs_rejected(world, keys, honest):
    led, h, v, ag = world
    _, _, vk = keys
    _, _, pub, _, proof = honest
    _commit(led, ag, "s", 2000)
    for bad in ("0x1234", "zz", b"\x00" * 128):
        with pytest.raises(ProofInvalid):
            led.settle(ag, "s", pub.total, bad, vk)
    with pytest.raises(ProofInvalid):
        led.settle(ag, "s", -1, proof, vk)


def test_chain_metrics(world, keys, honest):
    empty = Ledger().chain_metrics()
    assert empty == {"tx_count": 0, "total_gas": 0, "per_tx_gas": [], "gas_by_kind": {}, "verify_gas": 0,
                     "settlement_gas": 0, "latency_samples": []}
    led, h, v, ag = world
    _, _, vk = keys
    _, _, pub, _, proof = honest
    _commit(led, ag, "s", 2000)
    led.settle(ag, "s", pub.total, proof, vk)
    m = led.chain_metrics()
    assert m["verify_gas"] == 230_000
    assert m["tx_count"] == len(led.log) and m["total_gas"] == sum(m["per_tx_gas"])


def test_sixty_plain_settlements(keys, honest):
    _, pk, vk = keys
    _, com, pub, _, proof = honest
    led = Ledger()
    h, v = led.create_account(60 * 1160), led.create_account(0)
    ag = led.deploy_agreement(h, v, RATES, vk.digest(), pk.cs.descriptor_digest())
    for i in range(60):
        led.lock_escrow(ag, i, 1160)
        led.submit_commitment(ag, i, com)
        led.settle(ag, i, pub.total, proof, vk)
    assert led.chain_metrics(["settle"])["total_gas"] == 15_636_180
    assert led.balance(v) == 60 * 1160


# phase -> ops that are legal there
LEGAL = {"Created": {"lock"}, "EscrowLocked": {"commit", "top_up"}, "Committed": {"settle", "top_up"}, "Settled": set()}


def _to_phase(led, ag, sid, phase, vk, pub, proof):
    led.authorize(ag, sid)
    if phase == "Created":
        return
    led.lock_escrow(ag, sid, 2000)
    if phase == "EscrowLocked":
        return
    led.submit_commitment(ag, sid, tee_commit(UsageRecord(10, 500, 30)))
    if phase == "Committed":
        return
    led.settle(ag, sid, pub.total, proof, vk)


@pytest.mark.parametrize("phase", list(LEGAL))
@pytest.mark.parametrize("op", ["lock", "commit", "settle", "top_up"])
def test_transition_matrix(phase, op, world, keys, honest):
    led, h, v, ag = world
    _, _, vk = keys
    _, com, pub, _, proof = honest
    _to_phase(led, ag, "s", phase, vk, pub, proof)
    actions = {
        "lock": lambda: led.lock_escrow(ag, "s", 10),
        "commit": lambda: led.submit_commitment(ag, "s", com),
        "settle": lambda: led.settle(ag, "s", pub.total, proof, vk),
        "top_up": lambda: led.top_up_escrow(ag, "s", 10),
    }
    if op in LEGAL[phase]:
        actions[op]()
        return
    before = led.state_digest()
    with pytest.raises(LedgerError):
        actions[op]()
    assert led.state_digest() == before


def test_replay_reproduces_digest(world, keys, honest, tmp_path):
    led, h, v, ag = world
    _, _, vk = keys
    _, _, pub, _, proof = honest
    _commit(led, ag, "a", 2000)
    _commit(led, ag, "b", 500)
    led.settle(ag, "a", pub.total, proof, vk)
    with pytest.raises(InsufficientEscrow):
        led.settle(ag, "b", pub.total, proof, vk)
    with pytest.raises(ProofInvalid):
        led.settle(ag, "b", pub.total + 1, proof, vk)
    path = tmp_path / "log.jsonl"
    led.write_log(path)
    entries = Ledger.read_log(path)
    assert [e["seq"] for e in entries] == list(range(len(entries)))
    assert set(entries[0]) == {"seq", "kind", "payload", "gas", "timestamp"}
    assert Ledger.replay(entries).state_digest() == led.state_digest()


def test_streaming_log_file(tmp_path, keys):
    _, pk, vk = keys
    path = tmp_path / "stream.jsonl"
    led = Ledger(log_path=path)
    h = led.create_account(10)
    led.create_account(0)
    lines = [json.loads(x) for x in path.read_text().splitlines()]
    assert lines[0]["payload"]["address"] == h and len(lines) == 2


def test_latency_model_single_tx():
    led = Ledger(latency=LatencyModel(0.1, 120))
    led.create_account(1)
    assert led.chain_metrics()["latency_samples"][0] == pytest.approx(0.1 + 1 / 120)


def test_gas_schedule_validation(monkeypatch):
    assert GasSchedule().base_tx_gas == 30_603
    with pytest.raises(ValueError):
        GasSchedule(storage_write_gas=0)
    monkeypatch.setenv("B5G_GAS_L1_TX", "300000")
    assert GasSchedule.from_env().settle_gas("groth16") == {"base": 70_000, "verify": 230_000}


def test_concurrent_submission_serializes():
    led = Ledger()
    out = []

    def worker():
        for _ in range(50):
            out.append(led.create_account(1))

    threads = [threading.Thread(target=worker) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(set(out)) == 200
    assert [e["seq"] for e in led.log] == list(range(200))
    assert led.total_value() == 200


class LedgerMachine(RuleBasedStateMachine):
    """Random interleavings of escrow operations; value is conserved throughout."""

    def __init__(self):
        super().__init__()
        from b5groam.harness import agreement_keys
        from conftest import RATES as rates

        from b5groam.circuit import synthesize_witness
        from b5groam.groth16 import prove
        import random

        _, pk, vk = agreement_keys("tests", 1, rates)
        self.vk = vk
        rec = UsageRecord(10, 500, 30)
        self.com = tee_commit(rec)
        w, pub = synthesize_witness(rec, rates, self.com)
        self.total = pub.total
        self.proof = _PROOF_CACHE.setdefault("p", prove(pk, pub, w, random.Random(0)).to_hex())
        self.led = Ledger()
        self.h = self.led.create_account(20_000)
        self.v = self.led.create_account(0)
        self.ag = self.led.deploy_agreement(self.h, self.v, rates, vk.digest(), pk.cs.descriptor_digest())
        self.initial = self.led.total_value()
        self.sids = []

    @rule(escrow=st.integers(0, 4000))
    def lock(self, escrow):
        sid = str(len(self.sids))
        self.sids.append(sid)
        try:
            self.led.lock_escrow(self.ag, sid, escrow)
        except InsufficientBalance:
            pass

    @precondition(lambda self: self.sids)
    @rule(data=st.data(), op=st.sampled_from(["commit", "settle", "forge", "top_up"]), amount=st.integers(0, 1500))
    def act(self, data, op, amount):
        sid = data.draw(st.sampled_from(self.sids))
        try:
            if op == "commit":
                self.led.submit_commitment(self.ag, sid, self.com)
            elif op == "settle":
                self.led.settle(self.ag, sid, self.total, self.proof, self.vk)
            elif op == "forge":
                self.led.settle(self.ag, sid, self.total + 1, self.proof, self.vk)
            else:
                self.led.top_up_escrow(self.ag, sid, amount)
        except LedgerError:
            pass

    @invariant()
    def conserved(self):
        assert self.led.total_value() == self.initial

    @invariant()
    def paid_within_escrow(self):
        for s in self.led.agreements[self.ag].sessions.values():
            assert s.paid is None or s.paid <= s.escrow


_PROOF_CACHE = {}
LedgerMachine.TestCase.settings = settings(max_examples=30, stateful_step_count=25, deadline=None)
TestLedgerMachine = LedgerMachine.TestCase
