"""Scenario runner, adversary injector and benchmark reporters."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import random
import statistics
import subprocess
import sys
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import jsonschema

from .cdr import TEE, Commitment, UsageRecord, tee_commit
from .circuit import RateSchedule, build_constraints, circuit_descriptor, compute_total, synthesize_witness, unchecked_witness
from .errors import (
    B5GError,
    HashMismatch,
    LedgerError,
    RangeViolation,
    ScenarioInvalid,
    UnexpectedVerdict,
    UnknownBackend,
    UnsatisfiedConstraints,
)
from .groth16 import PROOF_BYTES, keygen, prove, setup
from .ledger import GasSchedule, Ledger, LatencyModel
from .rollup import L2Settlement, RollupGasModel, Sequencer

SCHEMA_VERSION = 1
ADVERSARIES = ("inflate_usage", "forge_total", "replay_commitment", "reuse_proof", "tamper_proof_bytes")

_ADVERSARY_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(ADVERSARIES)},
        "delta_sms": {"type": "integer", "minimum": 0},
        "delta_mb": {"type": "integer", "minimum": 0},
        "delta_min": {"type": "integer", "minimum": 0},
        "delta": {"type": "integer", "minimum": 1},
        "source": {"type": "string"},
        "bit": {"type": "integer", "minimum": 0},
    },
}

SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "actors", "rates", "sessions"],
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "seed": {"type": ["string", "integer"]},
        "layer": {"enum": ["L1", "L2"]},
        "backend": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "name": {"enum": ["groth16"]},
                "contributors": {"type": "integer", "minimum": 1},
                "salted": {"type": "boolean"},
            },
        },
        "batch_size": {"type": "integer", "minimum": 1},
        "rates": {
            "type": "object",
            "additionalProperties": False,
            "required": ["r_sms", "r_mb", "r_voice"],
            "properties": {k: {"type": "integer", "minimum": 0} for k in ("r_sms", "r_mb", "r_voice")},
        },
        "actors": {
            "type": "object",
            "additionalProperties": False,
            "required": ["hmno", "vmno"],
            "properties": {
                "hmno": {"$ref": "#/$defs/operator"},
                "vmno": {"$ref": "#/$defs/operator"},
                "ues": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["id"],
                        "properties": {"id": {"type": "string"}},
                    },
                },
            },
        },
        "sessions": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "usage", "escrow"],
                "properties": {
                    "id": {"type": "string"},
                    "ue": {"type": "string"},
                    "usage": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["n_sms", "n_mb", "n_min"],
                        "properties": {k: {"type": "integer", "minimum": 0} for k in ("n_sms", "n_mb", "n_min")},
                    },
                    "escrow": {"type": "integer", "minimum": 0},
                    "adversary": {"oneOf": [{"type": "null"}, _ADVERSARY_SCHEMA]},
                },
            },
        },
    },
    "$defs": {
        "operator": {
            "type": "object",
            "additionalProperties": False,
            "required": ["balance"],
            "properties": {"name": {"type": "string"}, "balance": {"type": "integer", "minimum": 0}},
        }
    },
}


# -- scenario model -----------------------------------------------------------


@dataclass(frozen=True)
class AdversaryStrategy:
    kind: str
    params: Mapping = field(default_factory=dict)


@dataclass(frozen=True)
class SessionSpec:
    id: str
    usage: UsageRecord
    escrow: int
    ue: Optional[str] = None
    adversary: Optional[AdversaryStrategy] = None


@dataclass(frozen=True)
class Scenario:
    hmno_balance: int
    vmno_balance: int
    rates: RateSchedule
    sessions: tuple
    seed: str = "00"
    layer: str = "L1"
    contributors: int = 1
    salted: bool = False
    batch_size: int = 60
    ues: tuple = ()

    @classmethod
    def from_json(cls, data: Mapping) -> "Scenario":
        try:
            jsonschema.validate(data, SCENARIO_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ScenarioInvalid(f"{'/'.join(map(str, exc.absolute_path)) or '<root>'}: {exc.message}") from None
        try:
            rates = RateSchedule.from_json(data["rates"])
            sessions = []
            for s in data["sessions"]:
                adv = s.get("adversary")
                strategy = None
                if adv is not None:
                    strategy = AdversaryStrategy(adv["kind"], {k: v for k, v in adv.items() if k != "kind"})
                sessions.append(SessionSpec(s["id"], UsageRecord.from_json(s["usage"]), s["escrow"], s.get("ue"), strategy))
        except (B5GError, ValueError) as exc:
            raise ScenarioInvalid(str(exc)) from None
        backend = data.get("backend", {})
        ues = tuple(u["id"] for u in data["actors"].get("ues", []))
        scenario = cls(
            hmno_balance=data["actors"]["hmno"]["balance"],
            vmno_balance=data["actors"]["vmno"]["balance"],
            rates=rates,
            sessions=tuple(sessions),
            seed=str(data.get("seed", "00")),
            layer=data.get("layer", "L1"),
            contributors=backend.get("contributors", 1),
            salted=backend.get("salted", False),
            batch_size=data.get("batch_size", 60),
            ues=ues,
        )
        scenario._check_references()
        return scenario

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Scenario":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioInvalid(f"cannot read scenario: {exc}") from None
        return cls.from_json(data)

    def _check_references(self) -> None:
        ids = [s.id for s in self.sessions]
        if len(set(ids)) != len(ids):
            raise ScenarioInvalid("session ids must be unique")
        known = set(self.ues)
        position = {s.id: i for i, s in enumerate(self.sessions)}
        for i, s in enumerate(self.sessions):
            if s.ue is not None and known and s.ue not in known:
                raise ScenarioInvalid(f"session {s.id} references unknown UE {s.ue}")
            adv = s.adversary
            if adv is None:
                continue
            if adv.kind == "replay_commitment":
                src = adv.params.get("source")
                if src not in position or position[src] >= i:
                    raise ScenarioInvalid(f"replay source of {s.id} must be an earlier session")
                source = self.sessions[position[src]]
                if source.adversary is not None:
                    raise ScenarioInvalid(f"replay source {src} must be honest")
                if not self.salted and source.usage == s.usage:
                    raise ScenarioInvalid(f"replay of {src} into {s.id} is indistinguishable: identical usage, unsalted")
            if adv.kind == "inflate_usage":
                if not any(adv.params.get(k, 0) for k in ("delta_sms", "delta_mb", "delta_min")):
                    raise ScenarioInvalid(f"inflate_usage on {s.id} needs a positive delta")
                if _billed(_inflated(s.usage, adv.params), self.rates) == compute_total(s.usage, self.rates):
                    raise ScenarioInvalid(f"inflation on {s.id} does not change the billed total")


def _inflated(usage: UsageRecord, params: Mapping) -> tuple[int, int, int]:
    # plain ints: inflation may push a metric past the range a UsageRecord admits
    return (
        usage.n_sms + params.get("delta_sms", 0),
        usage.n_mb + params.get("delta_mb", 0),
        usage.n_min + params.get("delta_min", 0),
    )


def _billed(values: Sequence[int], rates: RateSchedule) -> int:
    return values[0] * rates.r_sms + values[1] * rates.r_mb + values[2] * rates.r_voice


# -- keys -----------------------------------------------------------------------


def contribution_seeds(seed: str, contributors: int) -> list[bytes]:
    if contributors < 0:
        raise ValueError("contributors must be >= 0")
    base = str(seed).encode()
    return [hashlib.sha256(b"b5groam/contributor/" + base + i.to_bytes(4, "big")).digest() for i in range(contributors)]


@lru_cache(maxsize=8)
def agreement_keys(seed: str, contributors: int, rates: RateSchedule, salted: bool = False):
    """(pp, pk, vk) for one agreement; deterministic in every argument."""
    pp = setup(128, contribution_seeds(seed, contributors))
    cs = build_constraints(rates, salted=salted)
    pk, vk = keygen(pp, cs, seed=b"b5groam/keygen/" + str(seed).encode())
    return pp, pk, vk


@dataclass(frozen=True)
class KeyFiles:
    params: Path
    proving_key: Path
    verification_key: Path
    vk_digest: str


def keys_setup(contributors: int, seed: str, descriptor: Mapping, out_dir: Union[str, Path]) -> KeyFiles:
    """Run the ceremony and keygen for a circuit descriptor; persist pp / pk / vk."""
    rates = RateSchedule.from_json(descriptor["rates"])
    salted = bool(descriptor.get("salted", False))
    if int(descriptor.get("range_bits", 32)) != 32:
        raise ScenarioInvalid("only 32-bit range checks are supported")
    pp = setup(128, contribution_seeds(seed, contributors))
    cs = build_constraints(rates, salted=salted)
    pk, vk = keygen(pp, cs, seed=b"b5groam/keygen/" + str(seed).encode())
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = KeyFiles(out / "params.bin", out / "proving.key", out / "verifying.key", "0x" + vk.digest().hex())
    files.params.write_bytes(pp.to_bytes())
    files.proving_key.write_bytes(pk.to_bytes())
    files.verification_key.write_bytes(vk.to_bytes())
    return files


def load_descriptor(path: Union[str, Path]) -> dict:
    data = json.loads(Path(path).read_text())
    if "rates" not in data:
        data = circuit_descriptor(RateSchedule.from_json(data))
    return data


# -- scenario execution ---------------------------------------------------------


# attempts an adversarial session may legitimately win (the honest claim preceding a reuse)
_LEGITIMATE = {"first_settle"}


@dataclass
class Verdict:
    session: str
    adversary: Optional[str]
    outcome: str  # settled | rejected
    paid: int = 0
    attempts: list = field(default_factory=list)  # (attempt, result) pairs

    @property
    def expected(self) -> bool:
        if self.adversary is None:
            return self.outcome == "settled"
        return all(result != "accepted" for label, result in self.attempts if label not in _LEGITIMATE)

    def to_json(self) -> dict:
        return {
            "session": self.session,
            "adversary": self.adversary,
            "outcome": self.outcome,
            "paid": self.paid,
            "attempts": [list(a) for a in self.attempts],
            "expected": self.expected,
        }


@dataclass
class RunResult:
    digest: str
    verdicts: list
    hmno: str
    vmno: str
    ledger: Ledger
    sequencer: Optional[Sequencer] = None

    @property
    def ok(self) -> bool:
        return all(v.expected for v in self.verdicts)

    def report(self) -> dict:
        return {"digest": self.digest, "ok": self.ok, "verdicts": [v.to_json() for v in self.verdicts]}

    def report_bytes(self) -> bytes:
        return json.dumps(self.report(), sort_keys=True, indent=2).encode() + b"\n"


class _Driver:
    """Common flow for both layers; subclasses route ledger effects."""

    def __init__(self, scenario: Scenario, seed: str):
        self.sc = scenario
        self.rng = random.Random(hashlib.sha256(b"b5groam/run/" + seed.encode()).digest())
        self.pp, self.pk, self.vk = agreement_keys(seed, scenario.contributors, scenario.rates, scenario.salted)
        self.tee = TEE(salted=scenario.salted, rng=self.rng)
        self.ledger = Ledger()
        self.hmno = self.ledger.create_account(scenario.hmno_balance)
        self.vmno = self.ledger.create_account(scenario.vmno_balance)
        self.agreement = self.ledger.deploy_agreement(
            self.hmno, self.vmno, scenario.rates, self.vk.digest(), self.pk.cs.descriptor_digest()
        )
        self.proofs: dict[str, tuple] = {}  # session id -> (total, proof hex) of honest claims
        self.commitments: dict[str, Commitment] = {}

    # hooks
    def open_session(self, sid: str, escrow: int, com: Commitment) -> None:
        raise NotImplementedError

    def resubmit_commitment(self, sid: str, com: Commitment) -> str:
        raise NotImplementedError

    def try_settle(self, sid: str, total: int, proof_hex: str) -> tuple[str, int]:
        raise NotImplementedError

    def finish(self) -> None:
        pass

    # flow
    def honest_claim(self, spec: SessionSpec):
        com = self.commitments[spec.id]
        w, pub = synthesize_witness(spec.usage, self.sc.rates, com, nonce=self.tee.nonces.get(spec.id))
        proof = prove(self.pk, pub, w, self.rng)
        return pub.total, proof.to_hex()

    def run(self) -> list[Verdict]:
        for spec in self.sc.sessions:
            com = self.tee.commit(spec.usage, spec.id)
            self.commitments[spec.id] = com
            self.open_session(spec.id, spec.escrow, com)
        pending = []
        for spec in self.sc.sessions:
            pending.append(self._session(spec))
        self.finish()
        return [v() if callable(v) else v for v in pending]

    def _session(self, spec: SessionSpec):
        adv = spec.adversary
        if adv is None:
            total, proof = self.honest_claim(spec)
            self.proofs[spec.id] = (total, proof)
            return self._deferred(spec, [("settle", total, proof)], None)
        return getattr(self, "_adv_" + adv.kind)(spec, adv.params)

    def _deferred(self, spec, settles, kind, pre_attempts=()):
        handles = [(label if isinstance(label, str) else "settle", self.try_settle(spec.id, total, proof)) for label, total, proof in settles]

        def resolve():
            attempts = list(pre_attempts)
            paid = 0
            for label, h in handles:
                result, amount = h() if callable(h) else h
                attempts.append((label, result))
                paid += amount
            if kind is None:
                outcome = "settled" if attempts and attempts[0][1] == "accepted" else "rejected"
            else:
                outcome = "rejected" if all(r != "accepted" for _, r in attempts) else "settled"
            return Verdict(spec.id, kind, outcome, paid, attempts)

        return resolve

    # adversaries
    def _adv_inflate_usage(self, spec, params):
        values = _inflated(spec.usage, params)
        fake_total = _billed(values, self.sc.rates)
        com = self.commitments[spec.id]
        nonce = self.tee.nonces.get(spec.id)
        attempts = []
        try:
            fake = UsageRecord(*values)
        except RangeViolation:
            fake = None
            attempts.append(("honest_prover", "RangeViolation"))
        else:
            try:
                synthesize_witness(fake, self.sc.rates, com, nonce=nonce)
                attempts.append(("honest_prover", "accepted"))
            except HashMismatch:
                attempts.append(("honest_prover", "HashMismatch"))
        w, pub = unchecked_witness(values, fake_total, com.h_cdr.value, nonce)
        try:
            prove(self.pk, pub, w, self.rng)
            attempts.append(("forced_witness", "accepted"))
        except UnsatisfiedConstraints:
            attempts.append(("forced_witness", "UnsatisfiedConstraints"))
        if fake is None:
            # no in-range record to prove against a self-made hash
            return self._deferred(spec, [], spec.adversary.kind, attempts)
        # a sound proof of the inflated record against a self-made hash, sent for the real session
        own = tee_commit(fake, nonce=nonce)
        w, pub = synthesize_witness(fake, self.sc.rates, own, nonce=nonce)
        proof = prove(self.pk, pub, w, self.rng).to_hex()
        return self._deferred(spec, [("foreign_hash_proof", fake_total, proof)], spec.adversary.kind, attempts)

    def _adv_forge_total(self, spec, params):
        total, proof = self.honest_claim(spec)
        return self._deferred(spec, [("forged_total", total + params.get("delta", 1), proof)], spec.adversary.kind)

    def _adv_tamper_proof_bytes(self, spec, params):
        total, proof = self.honest_claim(spec)
        raw = bytearray(bytes.fromhex(proof[2:]))
        bit = params.get("bit", self.rng.randrange(8 * PROOF_BYTES)) % (8 * PROOF_BYTES)
        raw[bit // 8] ^= 1 << (bit % 8)
        return self._deferred(spec, [("tampered", total, "0x" + raw.hex())], spec.adversary.kind)

    def _adv_replay_commitment(self, spec, params):
        src = params["source"]
        attempts = [("recommit_source", self.resubmit_commitment(spec.id, self.commitments[src]))]
        total, proof = self.proofs[src]
        return self._deferred(spec, [("replayed_proof", total, proof)], spec.adversary.kind, attempts)

    def _adv_reuse_proof(self, spec, params):
        # the honest settlement goes through; the attack is a second claim with the same proof
        total, proof = self.honest_claim(spec)
        first = self.try_settle(spec.id, total, proof)
        second = self.try_settle(spec.id, total, proof)

        def resolve():
            r1, paid = first() if callable(first) else first
            r2, extra = second() if callable(second) else second
            return Verdict(spec.id, "reuse_proof", "rejected" if r2 != "accepted" else "settled", paid + extra,
                           [("first_settle", r1), ("reused_proof", r2)])

        return resolve


class _L1Driver(_Driver):
    def open_session(self, sid, escrow, com):
        self.ledger.authorize(self.agreement, sid)
        self.ledger.lock_escrow(self.agreement, sid, escrow)
        self.ledger.submit_commitment(self.agreement, sid, com)

    def resubmit_commitment(self, sid, com):
        try:
            self.ledger.submit_commitment(self.agreement, sid, com)
            return "accepted"
        except LedgerError as exc:
            return type(exc).__name__

    def try_settle(self, sid, total, proof_hex):
        try:
            res = self.ledger.settle(self.agreement, sid, total, proof_hex, self.vk)
            return "accepted", res.paid
        except LedgerError as exc:
            return type(exc).__name__, 0


class _L2Driver(_Driver):
    def __init__(self, scenario, seed):
        super().__init__(scenario, seed)
        self.seq = Sequencer(self.ledger, RollupGasModel(), max_batch_size=scenario.batch_size)
        self.seq.register_vk(self.vk)
        self.seq.deposit(self.hmno, scenario.hmno_balance)
        self._outcomes: dict[int, tuple] = {}
        self._txs: list[L2Settlement] = []

    def open_session(self, sid, escrow, com):
        self.seq.lock_escrow(self.agreement, sid, escrow)
        self.seq.submit_commitment(self.agreement, sid, com)

    def resubmit_commitment(self, sid, com):
        try:
            self.seq.submit_commitment(self.agreement, sid, com)
            return "accepted"
        except LedgerError as exc:
            return type(exc).__name__

    def try_settle(self, sid, total, proof_hex):
        tx = L2Settlement.make(self.agreement, sid, total, proof_hex)
        idx = len(self._txs)
        self._txs.append(tx)
        self.seq.submit_l2_tx(tx)
        return lambda: self._outcomes[idx]

    def finish(self):
        self.seq.process(self.scenario_batch)
        rejected = {}
        for tx, reason in self.seq.rejected:
            rejected.setdefault(id(tx), reason)
        executed = {id(tx) for b in self.seq.batches if b.status == "executed" for tx in b.txs}
        for idx, tx in enumerate(self._txs):
            if id(tx) in executed:
                self._outcomes[idx] = ("accepted", tx.total)
            else:
                self._outcomes[idx] = (rejected.get(id(tx), "NotExecuted"), 0)

    @property
    def scenario_batch(self):
        return self.sc.batch_size


def run_scenario(source: Union[Scenario, Mapping, str, Path], seed: Optional[str] = None, strict: bool = True) -> RunResult:
    """Execute every session end to end and check each verdict against its expectation."""
    if isinstance(source, Scenario):
        scenario = source
    elif isinstance(source, Mapping):
        scenario = Scenario.from_json(source)
    else:
        scenario = Scenario.load(source)
    if seed is not None:
        scenario = dataclasses.replace(scenario, seed=str(seed))
    driver = (_L2Driver if scenario.layer == "L2" else _L1Driver)(scenario, scenario.seed)
    verdicts = driver.run()
    result = RunResult(
        digest="0x" + driver.ledger.state_digest().hex(),
        verdicts=verdicts,
        hmno=driver.hmno,
        vmno=driver.vmno,
        ledger=driver.ledger,
        sequencer=getattr(driver, "seq", None),
    )
    if strict and not result.ok:
        bad = [v.session for v in verdicts if not v.expected]
        err = UnexpectedVerdict(f"unexpected verdicts for sessions {bad}")
        err.result = result
        raise err
    return result


# -- benchmarks -----------------------------------------------------------------

# reference rows; times in seconds, memory in MB, gas per verification
REFERENCE_BACKENDS = {
    "groth16": {"prove_time_s": 0.4, "prove_memory_mb": 275, "verify_gas": 230_000},
    "plonk": {"prove_time_s": 0.75, "prove_memory_mb": 310, "verify_gas": 270_000},
    "ultrahonk": {"prove_time_s": 0.17, "prove_memory_mb": 90, "verify_gas": 380_000},
}
REFERENCE_LAYERS = {
    60: {"batches": 1, "batch_size": 60, "commit": 205_907, "prove": 83_676, "execute": 99_166, "total_l2": 388_749, "total_l1": 15_636_180},
    100: {"batches": 2, "batch_size": 50, "commit": 411_802, "prove": 167_328, "execute": 182_794, "total_l2": 761_924, "total_l1": 26_060_300},
    200: {"batches": 3, "batch_size": 67, "commit": 617_625, "prove": 250_980, "execute": 297_486, "total_l2": 1_166_091, "total_l1": 52_120_600},
    500: {"batches": 7, "batch_size": 72, "commit": 1_458_233, "prove": 585_588, "execute": 694_162, "total_l2": 2_737_983, "total_l1": 130_301_500},
}
REFERENCE_BATCH_SIZES = {n: row["batch_size"] for n, row in REFERENCE_LAYERS.items()}


@dataclass
class BenchReport:
    kind: str
    columns: list
    rows: list  # each row: {column: (value, source)}
    config: dict = field(default_factory=dict)

    def table(self) -> list[dict]:
        return [{c: row[c][0] for c in self.columns} for row in self.rows]

    def write(self, csv_path: Union[str, Path]) -> Path:
        """CSV (value and source column per cell) plus a JSON sidecar."""
        csv_path = Path(csv_path)
        header = [h for c in self.columns for h in (c, c + "_source")]
        with csv_path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in self.rows:
                w.writerow([x for c in self.columns for x in row[c]])
        sidecar = csv_path.with_suffix(csv_path.suffix + ".json")
        sidecar.write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n")
        return sidecar

    def sidecar(self) -> dict:
        return {
            "kind": self.kind,
            "config": self.config,
            "columns": self.columns,
            "rows": [{c: {"value": row[c][0], "source": row[c][1]} for c in self.columns} for row in self.rows],
        }


_PROVE_WORKER = """
import json, resource, statistics, sys, time
from b5groam.cdr import UsageRecord, tee_commit
from b5groam.circuit import RateSchedule, synthesize_witness
from b5groam.groth16 import prove, verify
from b5groam.harness import agreement_keys
iters, seed = int(sys.argv[1]), sys.argv[2]
rates = RateSchedule(1, 2, 5)
pp, pk, vk = agreement_keys(seed, 1, rates)
rec = UsageRecord(10, 500, 30)
w, pub = synthesize_witness(rec, rates, tee_commit(rec))
prove(pk, pub, w)
times, vtimes, sizes = [], [], set()
for _ in range(iters):
    t = time.perf_counter(); proof = prove(pk, pub, w); times.append(time.perf_counter() - t)
    t = time.perf_counter(); ok = verify(vk, pub, proof); vtimes.append(time.perf_counter() - t)
    assert ok
    sizes.add(len(proof.to_bytes()))
rss_kb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
print(json.dumps({"times": times, "verify_times": vtimes, "rss_mb": rss_kb / 1024, "proof_bytes": sorted(sizes)}))
"""


def measure_groth16(iterations: int, seed: str = "bench") -> dict:
    """Prove ``iterations`` times in a fresh interpreter; peak RSS is that process's."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    out = subprocess.run(
        [sys.executable, "-c", _PROVE_WORKER, str(iterations), seed],
        check=True,
        capture_output=True,
        text=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def bench_prove(backend: str, iterations: int = 10, gas: Optional[GasSchedule] = None) -> BenchReport:
    gas = gas or GasSchedule()
    cols = ["backend", "prove_time_s", "prove_memory_mb", "verify_gas", "verify_time_s", "proof_bytes"]
    name = backend.lower()
    if name not in REFERENCE_BACKENDS:
        raise UnknownBackend(f"unknown backend {backend!r}; known: {sorted(REFERENCE_BACKENDS)}")
    if name == "groth16":
        m = measure_groth16(iterations)
        row = {
            "backend": (name, "config"),
            "prove_time_s": (round(statistics.median(m["times"]), 4), "measured"),
            "prove_memory_mb": (round(m["rss_mb"], 1), "measured"),
            "verify_gas": (gas.verify_gas[name], "paper"),
            "verify_time_s": (round(statistics.median(m["verify_times"]), 4), "measured"),
            "proof_bytes": (m["proof_bytes"][0], "measured"),
        }
    else:
        ref = REFERENCE_BACKENDS[name]
        row = {
            "backend": (name, "config"),
            "prove_time_s": (ref["prove_time_s"], "paper"),
            "prove_memory_mb": (ref["prove_memory_mb"], "paper"),
            "verify_gas": (ref["verify_gas"], "paper"),
            "verify_time_s": (None, "paper"),
            "proof_bytes": (None, "paper"),
        }
    return BenchReport("prove", cols, [row], {"backend": name, "iterations": iterations})


def _template(seed: str = "bench"):
    rates = RateSchedule(1, 2, 5)
    pp, pk, vk = agreement_keys(seed, 1, rates)
    rec = UsageRecord(10, 500, 30)
    com = tee_commit(rec)
    w, pub = synthesize_witness(rec, rates, com)
    proof = prove(pk, pub, w, random.Random(0))
    return rates, pk, vk, com, pub.total, proof.to_hex()


def run_l1_workload(n_txs: int, gas: Optional[GasSchedule] = None, template=None) -> Ledger:
    """n plain settlements on L1, all using one proof of an identical usage record."""
    rates, pk, vk, com, total, proof = template or _template()
    ledger = Ledger(gas=gas)
    h = ledger.create_account(n_txs * total)
    v = ledger.create_account(0)
    ag = ledger.deploy_agreement(h, v, rates, vk.digest(), pk.cs.descriptor_digest())
    for i in range(n_txs):
        ledger.lock_escrow(ag, str(i), total)
        ledger.submit_commitment(ag, str(i), com)
        ledger.settle(ag, str(i), total, proof, vk)
    return ledger


def run_l2_workload(n_txs: int, batch_size: int, gas: Optional[RollupGasModel] = None, template=None) -> Sequencer:
    rates, pk, vk, com, total, proof = template or _template()
    ledger = Ledger()
    h = ledger.create_account(n_txs * total)
    v = ledger.create_account(0)
    ag = ledger.deploy_agreement(h, v, rates, vk.digest(), pk.cs.descriptor_digest())
    seq = Sequencer(ledger, gas or RollupGasModel(), max_batch_size=batch_size)
    seq.register_vk(vk)
    seq.deposit(h, n_txs * total)
    for i in range(n_txs):
        seq.lock_escrow(ag, str(i), total)
        seq.submit_commitment(ag, str(i), com)
        seq.submit_l2_tx(L2Settlement.make(ag, str(i), total, proof))
    seq.process(batch_size)
    return seq


def bench_layers(
    tx_counts: Sequence[int],
    batch_size: Union[int, str, Mapping[int, int]] = "table",
    gas: Optional[RollupGasModel] = None,
) -> BenchReport:
    """Run each workload through both layers and compare metered gas.

    ``batch_size="table"`` uses the reference per-row batch sizes (60 for
    unlisted counts).
    """
    if not tx_counts:
        raise ValueError("tx_counts must be nonempty")
    gas = gas or RollupGasModel.from_env()
    schedule = GasSchedule(l1_per_settlement_gas=gas.l1_tx)
    template = _template()
    cols = ["txs", "batches", "batch_size", "commit", "prove", "execute", "total_l2", "total_l1", "reduction_pct",
            "ref_total_l2", "ref_total_l1", "l2_deviation_pct"]
    rows = []
    for n in tx_counts:
        if batch_size == "table":
            size = REFERENCE_BATCH_SIZES.get(n, 60)
        elif isinstance(batch_size, Mapping):
            size = batch_size.get(n, 60)
        else:
            size = int(batch_size)
        l1 = run_l1_workload(n, schedule, template).chain_metrics(["settle"])["total_gas"]
        seq = run_l2_workload(n, size, gas, template)
        by_kind = seq.ledger.chain_metrics(["batch_commit", "batch_prove", "batch_execute"])["gas_by_kind"]
        commit, prv, exe = (by_kind.get(k, 0) for k in ("batch_commit", "batch_prove", "batch_execute"))
        total_l2 = commit + prv + exe
        ref = REFERENCE_LAYERS.get(n)
        rows.append({
            "txs": (n, "config"),
            "batches": (len([b for b in seq.batches if b.status == "executed"]), "measured"),
            "batch_size": (size, "config"),
            "commit": (commit, "measured"),
            "prove": (prv, "measured"),
            "execute": (exe, "measured"),
            "total_l2": (total_l2, "measured"),
            "total_l1": (l1, "measured"),
            "reduction_pct": (round(100 * (1 - total_l2 / l1), 4), "measured"),
            "ref_total_l2": (ref["total_l2"] if ref else None, "paper"),
            "ref_total_l1": (ref["total_l1"] if ref else None, "paper"),
            "l2_deviation_pct": (round(100 * (total_l2 - ref["total_l2"]) / ref["total_l2"], 4) if ref else None, "measured"),
        })
    config = {"tx_counts": list(tx_counts), "batch_size": batch_size if not isinstance(batch_size, Mapping) else dict(batch_size),
              "gas_model": dataclasses.asdict(gas)}
    return BenchReport("layers", cols, rows, config)


def bench_latency(
    loads: Sequence[int],
    tps_cap: float = 100.0,
    base_latency: float = 0.1,
    offered_rate: Optional[float] = None,
) -> BenchReport:
    """Submit ``load`` settlements at ``offered_rate`` (default: the cap) and time the receipts."""
    if any(n <= 0 for n in loads):
        raise ValueError("loads must be positive")
    rate = float(offered_rate or tps_cap)
    rates, pk, vk, com, total, proof = _template()
    cols = ["load", "offered_tps", "median_latency_s", "p95_latency_s", "throughput_tps"]
    rows = []
    for n in loads:
        ledger = Ledger(latency=LatencyModel(base_latency, tps_cap))
        h = ledger.create_account(n * total)
        v = ledger.create_account(0)
        ag = ledger.deploy_agreement(h, v, rates, vk.digest(), pk.cs.descriptor_digest())
        for i in range(n):
            ledger.lock_escrow(ag, str(i), total)
            ledger.submit_commitment(ag, str(i), com)
        t0 = ledger._busy_until + 1.0
        for i in range(n):
            ledger.settle(ag, str(i), total, proof, vk, at=t0 + i / rate)
        settles = [r for r in ledger.receipts if r.kind == "settle"]
        lat = [r.latency for r in settles]
        span = max(r.timestamp for r in settles) - base_latency - t0
        rows.append({
            "load": (n, "config"),
            "offered_tps": (rate, "config"),
            "median_latency_s": (round(statistics.median(lat), 6), "measured"),
            "p95_latency_s": (round(sorted(lat)[int(0.95 * (n - 1))], 6), "measured"),
            "throughput_tps": (round(n / span, 6), "measured"),
        })
    return BenchReport("latency", cols, rows, {"loads": list(loads), "tps_cap": tps_cap, "base_latency": base_latency, "offered_rate": rate})


def audit_artifacts(paths: Sequence[Union[str, Path]], sentinels: Sequence[int]) -> list[tuple[str, int]]:
    """(path, sentinel) for every sentinel whose decimal or hex form appears in an artifact."""
    leaks = []
    for p in paths:
        text = Path(p).read_text(errors="replace").lower()
        for s in sentinels:
            if str(s) in text or format(s, "x") in text:
                leaks.append((str(p), s))
    return leaks
