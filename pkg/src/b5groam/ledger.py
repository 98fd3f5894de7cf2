"""Single-node L1 simulation: accounts, static gas metering, escrow contracts.

Every state change goes through :meth:`Ledger._apply`, which validates,
mutates, meters gas and appends one JSON-lines entry ``{seq, kind, payload,
gas, timestamp}``. Replaying those entries from genesis rebuilds the same
state digest.

Timestamps come from a deterministic queue model: transactions are served by
one block producer at ``tps_cap`` transactions per second, and each receipt's
latency is ``base_latency`` plus time spent waiting and being served.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

from .cdr import Commitment
from .circuit import RateSchedule
from .errors import (
    AlreadyCommitted,
    AttestationInvalid,
    BatchAlreadyCommitted,
    DeserializationError,
    InsufficientBalance,
    InsufficientEscrow,
    LedgerError,
    NotACommitment,
    NotCommitted,
    ProofInvalid,
    RollupError,
    RootMismatch,
    UnknownAccount,
    UnknownAgreement,
    VkMismatch,
    WrongPhase,
)
from .groth16 import Proof, VerificationKey, verify_bytes
from .merkle import canonical, state_root

PHASES = ("Created", "EscrowLocked", "Committed", "Settled")
DEFAULT_VERIFY_GAS = {"groth16": 230_000, "plonk": 270_000, "ultrahonk": 380_000}
L1_PER_SETTLEMENT_GAS = 260_603


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    return default if raw in (None, "") else int(raw)


@dataclass(frozen=True)
class GasSchedule:
    """Static per-transaction gas.

    A settlement costs ``base_tx_gas + verify_gas[backend]``. When
    ``base_tx_gas`` is left unset it is derived so that a Groth16 settlement
    costs exactly ``l1_per_settlement_gas``.
    """

    verify_gas: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_VERIFY_GAS))
    base_tx_gas: Optional[int] = None
    storage_write_gas: int = 20_000
    l1_per_settlement_gas: int = L1_PER_SETTLEMENT_GAS

    def __post_init__(self):
        if self.base_tx_gas is None:
            object.__setattr__(self, "base_tx_gas", self.l1_per_settlement_gas - self.verify_gas["groth16"])
        values = [self.base_tx_gas, self.storage_write_gas, self.l1_per_settlement_gas, *self.verify_gas.values()]
        if any(int(v) <= 0 for v in values):
            raise ValueError("gas schedule entries must be positive")

    @classmethod
    def from_env(cls) -> "GasSchedule":
        return cls(l1_per_settlement_gas=_env_int("B5G_GAS_L1_TX", L1_PER_SETTLEMENT_GAS))

    def settle_gas(self, backend: str) -> dict:
        return {"base": self.base_tx_gas, "verify": self.verify_gas[backend]}

    def write_gas(self, writes: int = 1) -> dict:
        return {"base": self.base_tx_gas, "storage": self.storage_write_gas * writes}


@dataclass(frozen=True)
class LatencyModel:
    base_latency: float = 0.1  # seconds, propagation + inclusion overhead
    tps_cap: float = 120.0

    def __post_init__(self):
        if self.tps_cap <= 0 or self.base_latency < 0:
            raise ValueError("latency model needs a positive cap and nonnegative base latency")


@dataclass
class SessionState:
    phase: str = "Created"
    escrow: int = 0
    h_cdr: Optional[str] = None  # 0x-hex of the commitment
    paid: Optional[int] = None

    @property
    def held(self) -> int:
        """Escrow still locked in the contract."""
        return self.escrow if self.phase in ("EscrowLocked", "Committed") else 0

    def to_json(self) -> dict:
        return {"phase": self.phase, "escrow": self.escrow, "h_cdr": self.h_cdr, "paid": self.paid}

    @classmethod
    def from_json(cls, data: Mapping) -> "SessionState":
        return cls(data["phase"], int(data["escrow"]), data["h_cdr"], data["paid"])


@dataclass
class AgreementContract:
    address: str
    hmno: str
    vmno: str
    rates: RateSchedule
    vk_digest: bytes
    descriptor_digest: bytes
    backend: str = "groth16"
    sessions: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "address": self.address,
            "hmno": self.hmno,
            "vmno": self.vmno,
            "rates": self.rates.to_json(),
            "vk_digest": "0x" + self.vk_digest.hex(),
            "descriptor_digest": "0x" + self.descriptor_digest.hex(),
            "backend": self.backend,
            "sessions": {sid: s.to_json() for sid, s in sorted(self.sessions.items())},
        }


@dataclass(frozen=True)
class SettlementResult:
    session_id: str
    paid: int
    refund: int
    gas: int
    verify_gas: int


@dataclass(frozen=True)
class Receipt:
    seq: int
    kind: str
    gas: int
    components: dict
    submitted: float
    timestamp: float

    @property
    def latency(self) -> float:
        return self.timestamp - self.submitted


class Ledger:
    """Single-writer L1 state machine."""

    def __init__(
        self,
        gas: Optional[GasSchedule] = None,
        latency: Optional[LatencyModel] = None,
        log_path: Union[str, Path, None] = None,
    ):
        self.gas = gas or GasSchedule()
        self.latency = latency or LatencyModel()
        self.accounts: dict[str, int] = {}
        self.agreements: dict[str, AgreementContract] = {}
        self.rollup = {"bridge": 0, "mirror": {"accounts": {}, "sessions": {}}, "batches": {}, "order": []}
        self.log: list[dict] = []
        self.receipts: list[Receipt] = []
        self._nonce = 0
        self._clock = 0.0
        self._busy_until = 0.0
        self._vks: dict[bytes, VerificationKey] = {}
        self._lock = threading.RLock()
        self._log_path = Path(log_path) if log_path else None
        if self._log_path:
            self._log_path.write_text("")

    # -- clock ---------------------------------------------------------------

    def advance(self, seconds: float) -> None:
        self._clock += seconds

    @property
    def clock(self) -> float:
        return self._clock

    def _schedule(self, at: Optional[float]) -> tuple[float, float]:
        arrival = self._clock if at is None else max(float(at), self._clock)
        self._clock = arrival
        start = max(arrival, self._busy_until)
        finish = start + 1.0 / self.latency.tps_cap
        self._busy_until = finish
        return arrival, finish + self.latency.base_latency

    # -- core ----------------------------------------------------------------

    def _new_address(self, kind: str) -> str:
        self._nonce += 1
        h = hashlib.sha256(f"b5groam/{kind}/{self._nonce}".encode()).digest()
        return "0x" + h[:20].hex()

    def _record(self, kind: str, payload: dict, components: dict, at: Optional[float]) -> Receipt:
        gas = sum(components.values())
        submitted, ts = self._schedule(at)
        seq = len(self.log)
        entry = {"seq": seq, "kind": kind, "payload": payload, "gas": gas, "timestamp": round(ts, 9)}
        self.log.append(entry)
        receipt = Receipt(seq, kind, gas, dict(components), submitted, ts)
        self.receipts.append(receipt)
        if self._log_path:
            with self._log_path.open("a") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
        return receipt

    def _apply(self, kind: str, payload: dict, at: Optional[float] = None):
        handler = getattr(self, f"_tx_{kind}", None)
        if handler is None:
            raise LedgerError(f"unknown transaction kind {kind!r}")
        with self._lock:
            return handler(payload, at)

    def _account(self, address: str) -> int:
        if address not in self.accounts:
            raise UnknownAccount(address)
        return self.accounts[address]

    def _agreement(self, address: str) -> AgreementContract:
        try:
            return self.agreements[address]
        except KeyError:
            raise UnknownAgreement(address) from None

    def _session(self, agreement: AgreementContract, session_id: str) -> SessionState:
        s = agreement.sessions.get(session_id)
        if s is None:
            raise WrongPhase(f"session {session_id!r} does not exist")
        return s

    # -- transactions --------------------------------------------------------

    def _tx_create_account(self, p, at):
        balance = int(p["balance"])
        if balance < 0:
            raise ValueError("balance must be nonnegative")
        address = self._new_address("account")
        if p.get("address") not in (None, address):
            raise LedgerError("replayed address diverges")
        self.accounts[address] = balance
        self._record("create_account", {"address": address, "balance": balance}, {"base": self.gas.base_tx_gas}, at)
        return address

    def _tx_deploy_agreement(self, p, at):
        for role in ("hmno", "vmno"):
            self._account(p[role])
        backend = p.get("backend", "groth16")
        if backend not in self.gas.verify_gas:
            raise LedgerError(f"no verification gas entry for backend {backend!r}")
        address = self._new_address("agreement")
        if p.get("address") not in (None, address):
            raise LedgerError("replayed address diverges")
        rates = RateSchedule.from_json(p["rates"])
        self.agreements[address] = AgreementContract(
            address=address,
            hmno=p["hmno"],
            vmno=p["vmno"],
            rates=rates,
            vk_digest=bytes.fromhex(p["vk_digest"][2:]),
            descriptor_digest=bytes.fromhex(p["descriptor_digest"][2:]),
            backend=backend,
        )
        payload = dict(p, address=address, backend=backend)
        self._record("deploy_agreement", payload, self.gas.write_gas(4), at)
        return address

    def _tx_authorize(self, p, at):
        ag = self._agreement(p["agreement"])
        sid = str(p["session_id"])
        if sid in ag.sessions:
            raise WrongPhase(f"session {sid!r} already exists")
        ag.sessions[sid] = SessionState()
        self._record("authorize", {"agreement": ag.address, "session_id": sid}, self.gas.write_gas(1), at)

    def _tx_lock_escrow(self, p, at):
        ag = self._agreement(p["agreement"])
        sid = str(p["session_id"])
        amount = int(p["amount"])
        if amount < 0:
            raise ValueError("escrow amount must be nonnegative")
        s = ag.sessions.get(sid)
        if s is not None and s.phase != "Created":
            raise WrongPhase(f"lock_escrow needs phase Created, session is {s.phase}")
        if self._account(ag.hmno) < amount:
            raise InsufficientBalance(f"HMNO balance {self.accounts[ag.hmno]} < {amount}")
        if s is None:
            self._tx_authorize({"agreement": ag.address, "session_id": sid}, at)
            s = ag.sessions[sid]
        self.accounts[ag.hmno] -= amount
        s.escrow = amount
        s.phase = "EscrowLocked"
        self._record("lock_escrow", {"agreement": ag.address, "session_id": sid, "amount": amount}, self.gas.write_gas(2), at)

    def _tx_top_up_escrow(self, p, at):
        ag = self._agreement(p["agreement"])
        sid = str(p["session_id"])
        amount = int(p["amount"])
        s = self._session(ag, sid)
        if s.phase not in ("EscrowLocked", "Committed"):
            raise WrongPhase(f"cannot top up escrow in phase {s.phase}")
        if amount < 0:
            raise ValueError("top-up must be nonnegative")
        if self._account(ag.hmno) < amount:
            raise InsufficientBalance(f"HMNO balance {self.accounts[ag.hmno]} < {amount}")
        self.accounts[ag.hmno] -= amount
        s.escrow += amount
        self._record("top_up_escrow", {"agreement": ag.address, "session_id": sid, "amount": amount}, self.gas.write_gas(2), at)

    def _tx_submit_commitment(self, p, at):
        ag = self._agreement(p["agreement"])
        sid = str(p["session_id"])
        h = p["h_cdr"]
        s = self._session(ag, sid)
        if s.h_cdr is not None:
            raise AlreadyCommitted(f"session {sid!r} already holds a commitment")
        if s.phase != "EscrowLocked":
            raise WrongPhase(f"submit_commitment needs phase EscrowLocked, session is {s.phase}")
        s.h_cdr = h
        s.phase = "Committed"
        self._record("submit_commitment", {"agreement": ag.address, "session_id": sid, "h_cdr": h}, self.gas.write_gas(1), at)

    def _tx_settle(self, p, at):
        ag = self._agreement(p["agreement"])
        sid = str(p["session_id"])
        s = self._session(ag, sid)
        if s.phase != "Committed":
            raise WrongPhase(f"settle needs phase Committed, session is {s.phase}")
        vk = self._vk_from_payload(p["vk"])
        if vk.digest() != ag.vk_digest:
            raise VkMismatch("verification key does not match the agreement")
        total = p["total"]
        proof = p["proof"]
        components = self.gas.settle_gas(ag.backend)
        payload = {"agreement": ag.address, "session_id": sid, "total": total, "proof": proof, "vk": p["vk"]}
        valid = (
            isinstance(total, int)
            and not isinstance(total, bool)
            and total >= 0
            and isinstance(proof, str)
            and verify_bytes(vk, [total, int(s.h_cdr, 16)], proof, memo=True)
        )
        if not valid:
            self._record("settle", dict(payload, status="rejected", reason="ProofInvalid"), components, at)
            raise ProofInvalid(f"proof for session {sid!r} did not verify")
        if total > s.escrow:
            self._record("settle", dict(payload, status="rejected", reason="InsufficientEscrow"), components, at)
            raise InsufficientEscrow(f"total {total} exceeds escrow {s.escrow}")
        refund = s.escrow - total
        self.accounts[ag.vmno] += total
        self.accounts[ag.hmno] += refund
        s.paid = total
        s.phase = "Settled"
        receipt = self._record("settle", dict(payload, status="settled"), components, at)
        return SettlementResult(sid, total, refund, receipt.gas, components["verify"])

    def _vk_from_payload(self, vk_hex: str) -> VerificationKey:
        try:
            raw = bytes.fromhex(vk_hex[2:])
        except (TypeError, ValueError) as exc:
            raise VkMismatch("verification key is not valid hex") from exc
        digest = hashlib.sha256(raw).digest()
        vk = self._vks.get(digest)
        if vk is None:
            try:
                vk = VerificationKey.from_bytes(raw)
            except DeserializationError as exc:
                raise VkMismatch(f"undecodable verification key: {exc}") from exc
            self._vks[digest] = vk
        return vk

    # -- rollup contract -----------------------------------------------------

    def _tx_rollup_deposit(self, p, at):
        addr = p["address"]
        amount = int(p["amount"])
        if amount < 0:
            raise ValueError("deposit must be nonnegative")
        if self._account(addr) < amount:
            raise InsufficientBalance(f"balance {self.accounts[addr]} < {amount}")
        self.accounts[addr] -= amount
        self.rollup["bridge"] += amount
        self._record("rollup_deposit", {"address": addr, "amount": amount}, self.gas.write_gas(2), at)

    def rollup_tip(self) -> bytes:
        """Post-root of the last committed batch, or the root of the finalized mirror."""
        order = self.rollup["order"]
        if order:
            return bytes.fromhex(self.rollup["batches"][order[-1]]["post_root"][2:])
        m = self.rollup["mirror"]
        return state_root(m["accounts"], m["sessions"])

    def _tx_batch_commit(self, p, at):
        bid = str(p["batch_id"])
        if bid in self.rollup["batches"]:
            raise BatchAlreadyCommitted(f"batch {bid} already committed")
        if p["pre_root"] != "0x" + self.rollup_tip().hex():
            raise RootMismatch(f"batch {bid} pre-root does not extend the committed chain")
        self.rollup["batches"][bid] = {
            "pre_root": p["pre_root"],
            "post_root": p["post_root"],
            "size": int(p["size"]),
            "status": "committed",
        }
        self.rollup["order"].append(bid)
        self._record("batch_commit", dict(p), {"commit": int(p["gas"])}, at)

    def _tx_batch_prove(self, p, at):
        bid = str(p["batch_id"])
        b = self.rollup["batches"].get(bid)
        if b is None:
            raise NotCommitted(f"batch {bid} is not committed")
        if b["status"] != "committed":
            raise RollupError(f"batch {bid} is already {b['status']}")
        b["status"] = "proven"
        b["attestation"] = p["attestation"]
        self._record("batch_prove", dict(p), {"prove": int(p["gas"])}, at)

    def _tx_batch_revert(self, p, at):
        bid = str(p["batch_id"])
        order = self.rollup["order"]
        if bid not in self.rollup["batches"] or self.rollup["batches"][bid]["status"] == "executed":
            raise NotCommitted(f"batch {bid} cannot be reverted")
        # drop the batch and everything committed after it
        idx = order.index(bid)
        for later in order[idx:]:
            del self.rollup["batches"][later]
        del order[idx:]
        self._record("batch_revert", {"batch_id": bid}, {"base": self.gas.base_tx_gas}, at)

    def _tx_batch_execute(self, p, at):
        bid = str(p["batch_id"])
        b = self.rollup["batches"].get(bid)
        if b is None:
            raise NotCommitted(f"batch {bid} is not committed")
        if b["status"] != "proven":
            raise AttestationInvalid(f"batch {bid} has no accepted attestation")
        order = self.rollup["order"]
        if order[0] != bid:
            raise RollupError("batches finalize in commit order")
        mirror = copy.deepcopy(self.rollup["mirror"])
        mirror["accounts"].update({a: int(v) for a, v in p["accounts"].items()})
        mirror["sessions"].update(p["sessions"])
        root = state_root(mirror["accounts"], mirror["sessions"])
        if "0x" + root.hex() != b["post_root"]:
            raise RootMismatch(f"mirrored state for batch {bid} does not hash to its post-root")
        self.rollup["mirror"] = mirror
        b["status"] = "executed"
        order.pop(0)
        self.rollup.setdefault("executed", []).append(bid)
        self._record("batch_execute", dict(p), {"execute": int(p["gas"])}, at)

    # -- public API ----------------------------------------------------------

    def create_account(self, balance: int, at: Optional[float] = None) -> str:
        return self._apply("create_account", {"balance": int(balance)}, at)

    def deploy_agreement(
        self,
        hmno: str,
        vmno: str,
        rates: RateSchedule,
        vk_digest: bytes,
        descriptor_digest: bytes,
        backend: str = "groth16",
        at: Optional[float] = None,
    ) -> str:
        payload = {
            "hmno": hmno,
            "vmno": vmno,
            "rates": rates.to_json(),
            "vk_digest": "0x" + bytes(vk_digest).hex(),
            "descriptor_digest": "0x" + bytes(descriptor_digest).hex(),
            "backend": backend,
        }
        return self._apply("deploy_agreement", payload, at)

    def authorize(self, agreement: str, session_id: str, at: Optional[float] = None) -> None:
        """Record the UE authentication/authorization event that opens a session."""
        self._apply("authorize", {"agreement": agreement, "session_id": session_id}, at)

    def lock_escrow(self, agreement: str, session_id: str, amount: int, at: Optional[float] = None) -> None:
        self._apply("lock_escrow", {"agreement": agreement, "session_id": session_id, "amount": amount}, at)

    def top_up_escrow(self, agreement: str, session_id: str, amount: int, at: Optional[float] = None) -> None:
        self._apply("top_up_escrow", {"agreement": agreement, "session_id": session_id, "amount": amount}, at)

    def submit_commitment(self, agreement: str, session_id: str, h_cdr: Commitment, at: Optional[float] = None) -> None:
        if not isinstance(h_cdr, Commitment):
            raise NotACommitment(f"expected a TEE commitment, got {type(h_cdr).__name__}")
        self._apply("submit_commitment", {"agreement": agreement, "session_id": session_id, "h_cdr": h_cdr.to_hex()}, at)

    def settle(
        self,
        agreement: str,
        session_id: str,
        total: int,
        proof: Union[Proof, bytes, str],
        vk: VerificationKey,
        at: Optional[float] = None,
    ) -> SettlementResult:
        if isinstance(proof, Proof):
            proof = proof.to_hex()
        elif isinstance(proof, (bytes, bytearray)):
            proof = "0x" + bytes(proof).hex()
        self._vks.setdefault(vk.digest(), vk)
        payload = {"agreement": agreement, "session_id": session_id, "total": total, "proof": proof, "vk": "0x" + vk.to_bytes().hex()}
        return self._apply("settle", payload, at)

    def rollup_deposit(self, address: str, amount: int, at: Optional[float] = None) -> None:
        self._apply("rollup_deposit", {"address": address, "amount": amount}, at)

    def batch_commit(self, manifest: dict, gas: int, at: Optional[float] = None) -> Receipt:
        payload = {k: manifest[k] for k in ("batch_id", "pre_root", "post_root", "size")}
        self._apply("batch_commit", dict(payload, tx_digests=list(manifest["tx_digests"]), gas=gas), at)
        return self.receipts[-1]

    def batch_prove(self, batch_id, attestation: dict, gas: int, at: Optional[float] = None) -> Receipt:
        self._apply("batch_prove", {"batch_id": str(batch_id), "attestation": attestation, "gas": gas}, at)
        return self.receipts[-1]

    def batch_revert(self, batch_id, at: Optional[float] = None) -> None:
        self._apply("batch_revert", {"batch_id": str(batch_id)}, at)

    def batch_execute(self, batch_id, accounts: dict, sessions: dict, gas: int, at: Optional[float] = None) -> Receipt:
        payload = {"batch_id": str(batch_id), "accounts": dict(accounts), "sessions": dict(sessions), "gas": gas}
        self._apply("batch_execute", payload, at)
        return self.receipts[-1]

    # -- views ---------------------------------------------------------------

    def balance(self, address: str) -> int:
        return self._account(address)

    def session(self, agreement: str, session_id: str) -> SessionState:
        return self._session(self._agreement(agreement), session_id)

    def total_value(self) -> int:
        """Balances + held escrow + rollup bridge; invariant under every transaction."""
        escrow = sum(s.held for ag in self.agreements.values() for s in ag.sessions.values())
        return sum(self.accounts.values()) + escrow + self.rollup["bridge"]

    def state_dict(self) -> dict:
        return {
            "accounts": dict(sorted(self.accounts.items())),
            "agreements": {a: ag.to_json() for a, ag in sorted(self.agreements.items())},
            "rollup": self.rollup,
            "nonce": self._nonce,
        }

    def snapshot_json(self) -> str:
        return canonical(self.state_dict()).decode()

    def state_digest(self) -> bytes:
        return hashlib.sha256(canonical(self.state_dict())).digest()

    def chain_metrics(self, kinds: Optional[Iterable[str]] = None) -> dict:
        """Gas and latency summary, optionally restricted to some transaction kinds."""
        wanted = None if kinds is None else set(kinds)
        rs = [r for r in self.receipts if wanted is None or r.kind in wanted]
        by_kind: dict[str, int] = {}
        for r in rs:
            by_kind[r.kind] = by_kind.get(r.kind, 0) + r.gas
        return {
            "tx_count": len(rs),
            "total_gas": sum(r.gas for r in rs),
            "per_tx_gas": [r.gas for r in rs],
            "gas_by_kind": by_kind,
            "verify_gas": sum(r.components.get("verify", 0) for r in rs),
            "settlement_gas": sum(r.gas for r in rs if r.kind == "settle"),
            "latency_samples": [r.latency for r in rs],
        }

    # -- persistence ---------------------------------------------------------

    def write_log(self, path: Union[str, Path]) -> None:
        with Path(path).open("w") as fh:
            for entry in self.log:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")

    @staticmethod
    def read_log(path: Union[str, Path]) -> list[dict]:
        return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]

    @classmethod
    def replay(
        cls,
        entries: Iterable[dict],
        gas: Optional[GasSchedule] = None,
        latency: Optional[LatencyModel] = None,
    ) -> "Ledger":
        """Re-execute a transaction log from genesis."""
        ledger = cls(gas=gas, latency=latency)
        for entry in entries:
            try:
                ledger._apply(entry["kind"], dict(entry["payload"]))
            except LedgerError:
                if entry["payload"].get("status") != "rejected":
                    raise
        return ledger

