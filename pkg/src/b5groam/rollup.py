"""L2 sequencer: batches settlements and posts commit / prove / execute to L1.

Deposits, escrow locks and commitments are L2 operations. They update the
sequencer's head view immediately and ride along with the next sealed batch.
Only settlements occupy batch slots, so ``size`` counts settlements.

The batch validity proof is emulated. ``prove_batch`` re-verifies every inner
Groth16 proof and signs the verdicts with an HMAC key shared by sequencer and
L1 verifier.
"""

from __future__ import annotations

import copy
import hashlib
import hmac
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from .cdr import Commitment
from .errors import (
    AlreadyCommitted,
    AttestationInvalid,
    BatchAlreadyCommitted,
    EmptyQueue,
    InnerProofInvalid,
    InsufficientBalance,
    InsufficientEscrow,
    LedgerError,
    MalformedTx,
    NotACommitment,
    NotCommitted,
    ProofInvalid,
    RootMismatch,
    UnknownAccount,
    WrongPhase,
)
from .groth16 import Proof, VerificationKey, verify_bytes
from .ledger import L1_PER_SETTLEMENT_GAS, Ledger, Receipt
from .merkle import canonical, state_root

COMMIT_GAS = 205_907
PROVE_GAS = 83_676
EXECUTE_GAS = 99_166


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    return default if raw in (None, "") else int(raw)


@dataclass(frozen=True)
class RollupGasModel:
    """Constant per-batch gas for each L1 phase, plus the single-layer baseline."""

    commit: int = COMMIT_GAS
    prove: int = PROVE_GAS
    execute: int = EXECUTE_GAS
    l1_tx: int = L1_PER_SETTLEMENT_GAS

    def __post_init__(self):
        if min(self.commit, self.prove, self.execute, self.l1_tx) <= 0:
            raise ValueError("gas model constants must be positive")

    @classmethod
    def from_env(cls) -> "RollupGasModel":
        return cls(
            commit=_env_int("B5G_GAS_COMMIT", COMMIT_GAS),
            prove=_env_int("B5G_GAS_PROVE", PROVE_GAS),
            execute=_env_int("B5G_GAS_EXECUTE", EXECUTE_GAS),
            l1_tx=_env_int("B5G_GAS_L1_TX", L1_PER_SETTLEMENT_GAS),
        )

    @property
    def per_batch(self) -> int:
        return self.commit + self.prove + self.execute

    def phase_gas(self) -> dict:
        return {"commit": self.commit, "prove": self.prove, "execute": self.execute}

    def l2_total(self, n_batches: int) -> int:
        return n_batches * self.per_batch

    def l1_total(self, n_txs: int) -> int:
        return n_txs * self.l1_tx


def effective_throughput(batch_size: int, l1_tps: float) -> float:
    """Settlements per second when each L1 transaction finalizes a whole batch."""
    if batch_size <= 0 or l1_tps <= 0:
        raise ValueError("batch size and L1 throughput must be positive")
    return batch_size * l1_tps


def greedy_batches(n_txs: int, max_size: int) -> list[int]:
    """Batch sizes produced by filling each batch to ``max_size``."""
    if max_size < 1:
        raise ValueError("max batch size must be >= 1")
    full, rest = divmod(n_txs, max_size)
    return [max_size] * full + ([rest] if rest else [])


@dataclass
class L2State:
    accounts: dict = field(default_factory=dict)  # address -> balance
    sessions: dict = field(default_factory=dict)  # "agreement/session_id" -> session dict

    @property
    def root(self) -> bytes:
        return state_root(self.accounts, self.sessions)

    def copy(self) -> "L2State":
        return L2State(dict(self.accounts), copy.deepcopy(self.sessions))

    def total_value(self) -> int:
        held = sum(s["escrow"] for s in self.sessions.values() if s["phase"] in ("EscrowLocked", "Committed"))
        return sum(self.accounts.values()) + held

    def diff_from(self, older: "L2State") -> tuple[dict, dict]:
        accounts = {a: v for a, v in self.accounts.items() if older.accounts.get(a) != v}
        sessions = {k: v for k, v in self.sessions.items() if older.sessions.get(k) != v}
        return accounts, sessions


@dataclass(frozen=True)
class L2Settlement:
    agreement: str
    session_id: str
    total: int
    proof: str  # 0x-hex compressed proof

    @classmethod
    def make(cls, agreement: str, session_id: str, total: int, proof: Union[Proof, bytes, str]) -> "L2Settlement":
        if isinstance(proof, Proof):
            proof = proof.to_hex()
        elif isinstance(proof, (bytes, bytearray)):
            proof = "0x" + bytes(proof).hex()
        return cls(agreement, str(session_id), total, proof)

    @property
    def key(self) -> str:
        return f"{self.agreement}/{self.session_id}"

    def to_json(self) -> dict:
        return {"agreement": self.agreement, "session_id": self.session_id, "total": self.total, "proof": self.proof}

    def digest(self) -> str:
        return "0x" + hashlib.sha256(canonical(self.to_json())).hexdigest()


@dataclass
class Batch:
    batch_id: int
    txs: list
    ops: list
    pre_state: L2State
    post_state: L2State
    pre_root: bytes
    post_root: bytes
    phase_gas: dict
    rejected: list = field(default_factory=list)  # (tx, reason) dropped at sealing
    status: str = "sealed"  # sealed -> committed -> proven -> executed | reverted

    @property
    def size(self) -> int:
        return len(self.txs)

    def manifest(self) -> dict:
        return {
            "batch_id": self.batch_id,
            "pre_root": "0x" + self.pre_root.hex(),
            "post_root": "0x" + self.post_root.hex(),
            "size": self.size,
            "tx_digests": [tx.digest() for tx in self.txs],
            "phase_gas": dict(self.phase_gas),
        }

    def digest(self) -> bytes:
        return hashlib.sha256(canonical(self.manifest())).digest()

    def write_manifest(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.manifest(), indent=2, sort_keys=True) + "\n")


@dataclass(frozen=True)
class BatchAttestation:
    batch_id: int
    batch_digest: str
    verdicts: tuple
    signature: str

    def to_json(self) -> dict:
        return {
            "batch_id": self.batch_id,
            "batch_digest": self.batch_digest,
            "verdicts": list(self.verdicts),
            "signature": self.signature,
        }


def _sign(key: bytes, batch_digest: str, verdicts: Iterable[bool]) -> str:
    msg = batch_digest.encode() + bytes(int(v) for v in verdicts)
    return hmac.new(key, msg, hashlib.sha256).hexdigest()


class Sequencer:
    """Single-writer owner of the L2 queue and state."""

    def __init__(
        self,
        ledger: Ledger,
        gas: Optional[RollupGasModel] = None,
        max_batch_size: int = 60,
        attestor_key: bytes = b"b5groam/attestor",
    ):
        self.ledger = ledger
        self.gas = gas or RollupGasModel()
        self.max_batch_size = max_batch_size
        self._key = attestor_key
        self.sealed = L2State()  # state after the last sealed batch
        self.head = L2State()  # sealed + pending ops
        self.pending_ops: list[dict] = []
        self.queue: list[L2Settlement] = []
        self.batches: list[Batch] = []
        self.rejected: list[tuple[L2Settlement, str]] = []
        self._vks: dict[bytes, VerificationKey] = {}
        self._next_id = 0

    def register_vk(self, vk: VerificationKey) -> bytes:
        digest = vk.digest()
        self._vks[digest] = vk
        return digest

    # -- L2 operations -------------------------------------------------------

    def _push_op(self, op: dict) -> None:
        trial = self.head.copy()
        self._apply_op(trial, op)
        self.head = trial
        self.pending_ops.append(op)

    def _apply_op(self, state: L2State, op: dict) -> None:
        kind = op["kind"]
        if kind == "deposit":
            state.accounts[op["address"]] = state.accounts.get(op["address"], 0) + op["amount"]
            return
        ag = self.ledger._agreement(op["agreement"])
        key = f"{ag.address}/{op['session_id']}"
        s = state.sessions.get(key)
        if kind == "lock":
            if s is not None:
                raise WrongPhase(f"lock needs a fresh session, {key} is {s['phase']}")
            if state.accounts.get(ag.hmno, 0) < op["amount"]:
                raise InsufficientBalance(f"L2 balance of {ag.hmno} below {op['amount']}")
            state.accounts[ag.hmno] -= op["amount"]
            state.sessions[key] = {"phase": "EscrowLocked", "escrow": op["amount"], "h_cdr": None, "paid": None}
        elif kind == "commit":
            if s is None:
                raise WrongPhase(f"session {key} has no escrow")
            if s["h_cdr"] is not None:
                raise AlreadyCommitted(f"session {key} already holds a commitment")
            if s["phase"] != "EscrowLocked":
                raise WrongPhase(f"commit needs EscrowLocked, {key} is {s['phase']}")
            s["h_cdr"] = op["h_cdr"]
            s["phase"] = "Committed"
        else:
            raise MalformedTx(f"unknown L2 op {kind!r}")

    def deposit(self, address: str, amount: int) -> None:
        """Bridge funds from L1 into the rollup."""
        self.ledger.rollup_deposit(address, amount)
        self._push_op({"kind": "deposit", "address": address, "amount": int(amount)})

    def lock_escrow(self, agreement: str, session_id: str, amount: int) -> None:
        self._push_op({"kind": "lock", "agreement": agreement, "session_id": str(session_id), "amount": int(amount)})

    def submit_commitment(self, agreement: str, session_id: str, h_cdr: Commitment) -> None:
        if not isinstance(h_cdr, Commitment):
            raise NotACommitment(f"expected a TEE commitment, got {type(h_cdr).__name__}")
        self._push_op({"kind": "commit", "agreement": agreement, "session_id": str(session_id), "h_cdr": h_cdr.to_hex()})

    def submit_l2_tx(self, tx: L2Settlement) -> int:
        if not isinstance(tx, L2Settlement):
            raise MalformedTx("expected an L2Settlement")
        if tx.agreement not in self.ledger.agreements:
            raise MalformedTx(f"unknown agreement {tx.agreement}")
        s = self.head.sessions.get(tx.key)
        if s is None:
            raise MalformedTx(f"unknown L2 session {tx.key}")
        if s["h_cdr"] is None:
            raise MalformedTx(f"session {tx.key} has no commitment")
        if not isinstance(tx.total, int) or isinstance(tx.total, bool) or tx.total < 0:
            raise MalformedTx("total must be a nonnegative integer")
        if not isinstance(tx.proof, str) or not tx.proof.startswith("0x"):
            raise MalformedTx("proof must be 0x-hex")
        self.queue.append(tx)
        return len(self.queue) - 1

    # -- settlement execution ------------------------------------------------

    def _settle(self, state: L2State, tx: L2Settlement) -> None:
        ag = self.ledger._agreement(tx.agreement)
        s = state.sessions.get(tx.key)
        if s is None or s["phase"] != "Committed":
            raise WrongPhase(f"session {tx.key} is not awaiting settlement")
        vk = self._vks.get(ag.vk_digest)
        if vk is None:
            raise MalformedTx(f"no verification key registered for agreement {ag.address}")
        if not verify_bytes(vk, [tx.total, int(s["h_cdr"], 16)], tx.proof, memo=True):
            raise ProofInvalid(f"proof for {tx.key} did not verify")
        if tx.total > s["escrow"]:
            raise InsufficientEscrow(f"total {tx.total} exceeds escrow {s['escrow']}")
        state.accounts[ag.vmno] = state.accounts.get(ag.vmno, 0) + tx.total
        state.accounts[ag.hmno] = state.accounts.get(ag.hmno, 0) + s["escrow"] - tx.total
        s["paid"] = tx.total
        s["phase"] = "Settled"

    def seal_batch(self, max_size: Optional[int] = None) -> Batch:
        """Pop up to ``max_size`` valid settlements into a new batch."""
        limit = self.max_batch_size if max_size is None else max_size
        if limit < 1:
            raise ValueError("max batch size must be >= 1")
        if not self.queue:
            raise EmptyQueue("no pending settlements")
        pre = self.sealed
        state = pre.copy()
        for op in self.pending_ops:
            self._apply_op(state, op)
        accepted, rejected = [], []
        while self.queue and len(accepted) < limit:
            tx = self.queue.pop(0)
            try:
                self._settle(state, tx)
            except (LedgerError, MalformedTx) as exc:
                rejected.append((tx, type(exc).__name__))
            else:
                accepted.append(tx)
        self.rejected.extend(rejected)
        if not accepted:
            raise EmptyQueue(f"no valid settlements among {len(rejected)} pending")
        batch = Batch(
            batch_id=self._next_id,
            txs=accepted,
            ops=self.pending_ops,
            pre_state=pre,
            post_state=state,
            pre_root=pre.root,
            post_root=state.root,
            phase_gas=self.gas.phase_gas(),
            rejected=rejected,
        )
        self._next_id += 1
        self.pending_ops = []
        self.sealed = state
        self.head = state.copy()
        self.batches.append(batch)
        return batch

    # -- L1 phases -----------------------------------------------------------

    def commit_batch(self, batch: Batch) -> Receipt:
        if batch.status != "sealed":
            raise BatchAlreadyCommitted(f"batch {batch.batch_id} is already {batch.status}")
        receipt = self.ledger.batch_commit(batch.manifest(), self.gas.commit)
        batch.status = "committed"
        return receipt

    def prove_batch(self, batch: Batch) -> BatchAttestation:
        """Re-verify every inner settlement and attest; a failure reverts the batch."""
        if batch.status != "committed":
            raise NotCommitted(f"batch {batch.batch_id} is {batch.status}, not committed")
        state = batch.pre_state.copy()
        for op in batch.ops:
            self._apply_op(state, op)
        for index, tx in enumerate(batch.txs):
            try:
                self._settle(state, tx)
            except (LedgerError, MalformedTx) as exc:
                self._revert(batch, index)
                raise InnerProofInvalid(index, f"batch {batch.batch_id} tx {index}: {exc}") from exc
        if state.root != batch.post_root:
            self._revert(batch, None)
            raise RootMismatch(f"batch {batch.batch_id} does not reproduce its post-root")
        verdicts = tuple(True for _ in batch.txs)
        digest = "0x" + batch.digest().hex()
        att = BatchAttestation(batch.batch_id, digest, verdicts, _sign(self._key, digest, verdicts))
        self.ledger.batch_prove(batch.batch_id, att.to_json(), self.gas.prove)
        batch.status = "proven"
        return att

    def _revert(self, batch: Batch, bad_index: Optional[int]) -> None:
        """Undo ``batch`` and every later batch on L1 and L2; requeue their work."""
        self.ledger.batch_revert(batch.batch_id)
        idx = self.batches.index(batch)
        dropped = self.batches[idx:]
        del self.batches[idx:]
        ops, txs = [], []
        for b in dropped:
            b.status = "reverted"
            ops.extend(b.ops)
            txs.extend(tx for i, tx in enumerate(b.txs) if not (b is batch and i == bad_index))
        if bad_index is not None:
            self.rejected.append((batch.txs[bad_index], "InnerProofInvalid"))
        self.pending_ops = ops + self.pending_ops
        self.queue = txs + self.queue
        self.sealed = batch.pre_state
        head = self.sealed.copy()
        for op in self.pending_ops:
            self._apply_op(head, op)
        self.head = head

    def check_attestation(self, batch: Batch, attestation: BatchAttestation) -> bool:
        digest = "0x" + batch.digest().hex()
        return (
            attestation.batch_id == batch.batch_id
            and attestation.batch_digest == digest
            and len(attestation.verdicts) == batch.size
            and all(v is True for v in attestation.verdicts)
            and hmac.compare_digest(attestation.signature, _sign(self._key, digest, attestation.verdicts))
        )

    def execute_batch(self, batch: Batch, attestation: BatchAttestation) -> Receipt:
        if batch.status in ("sealed", "reverted"):
            raise NotCommitted(f"batch {batch.batch_id} is {batch.status}")
        if not self.check_attestation(batch, attestation):
            raise AttestationInvalid(f"attestation does not match batch {batch.batch_id}")
        accounts, sessions = batch.post_state.diff_from(batch.pre_state)
        receipt = self.ledger.batch_execute(batch.batch_id, accounts, sessions, self.gas.execute)
        batch.status = "executed"
        return receipt

    def process(self, max_size: Optional[int] = None) -> list[Batch]:
        """Seal, commit, prove and execute until the queue is drained."""
        done = []
        while self.queue:
            try:
                batch = self.seal_batch(max_size)
            except EmptyQueue:
                break
            self.commit_batch(batch)
            try:
                att = self.prove_batch(batch)
            except InnerProofInvalid:
                continue
            self.execute_batch(batch, att)
            done.append(batch)
        return done

    def l2_balance(self, address: str) -> int:
        if address not in self.head.accounts:
            raise UnknownAccount(address)
        return self.head.accounts[address]
