"""CDR data model and the emulated-TEE commitment step.

The UE's trusted environment is modelled as the only code path allowed to
produce a :class:`Commitment`. The ledger refuses anything else.
"""

from __future__ import annotations

import json
import math
import secrets
from dataclasses import dataclass, field
from pathlib import Path

from .errors import RangeViolation
from .field import MODULUS, FieldElement
from .poseidon import default_params, hash_ints

METRIC_BITS = 32
METRIC_LIMIT = 1 << METRIC_BITS


@dataclass(frozen=True)
class UsageRecord:
    """Session aggregate: SMS count, whole megabytes, whole minutes."""

    n_sms: int
    n_mb: int
    n_min: int

    def __post_init__(self):
        for name in ("n_sms", "n_mb", "n_min"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise RangeViolation(f"{name} must be an integer, got {value!r}")
            if not 0 <= value < METRIC_LIMIT:
                raise RangeViolation(f"{name}={value} outside [0, 2^{METRIC_BITS})")

    @classmethod
    def from_measurements(cls, n_sms: int, mb: float, minutes: float) -> "UsageRecord":
        """Round fractional data and voice usage up to the next whole unit."""
        return cls(int(n_sms), math.ceil(mb), math.ceil(minutes))

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.n_sms, self.n_mb, self.n_min)

    def to_json(self) -> dict:
        return {"n_sms": self.n_sms, "n_mb": self.n_mb, "n_min": self.n_min}

    @classmethod
    def from_json(cls, data: dict) -> "UsageRecord":
        unknown = set(data) - {"n_sms", "n_mb", "n_min"}
        if unknown:
            raise ValueError(f"unknown CDR fields {sorted(unknown)}")
        return cls(int(data["n_sms"]), int(data["n_mb"]), int(data["n_min"]))

    @classmethod
    def load(cls, path: str | Path) -> "UsageRecord":
        return cls.from_json(json.loads(Path(path).read_text()))


_TEE_TOKEN = object()


class Commitment:
    """Poseidon commitment to a usage record; only :func:`tee_commit` makes these."""

    __slots__ = ("h_cdr",)

    def __init__(self, h_cdr, *, _token=None):
        if _token is not _TEE_TOKEN:
            raise TypeError("Commitment objects are produced by tee_commit only")
        object.__setattr__(self, "h_cdr", FieldElement(h_cdr))

    def __setattr__(self, name, value):
        raise AttributeError("Commitment is immutable")

    def __eq__(self, other):
        return isinstance(other, Commitment) and other.h_cdr == self.h_cdr

    def __hash__(self):
        return hash(("commitment", self.h_cdr.value))

    def __repr__(self):
        return f"Commitment({self.h_cdr.to_hex()})"

    def to_hex(self) -> str:
        return self.h_cdr.to_hex()

    @classmethod
    def from_hex(cls, text: str) -> "Commitment":
        """Rebuild a commitment previously emitted by the TEE (e.g. read from the log)."""
        return cls(FieldElement.from_hex(text), _token=_TEE_TOKEN)

    @classmethod
    def _unchecked(cls, value) -> "Commitment":
        # test and adversary helper: fabricate a commitment to an arbitrary value
        return cls(value, _token=_TEE_TOKEN)


@dataclass(frozen=True)
class SessionContext:
    session_id: str
    ue_id: str
    agreement_address: str


@dataclass
class TEE:
    """Emulated trusted environment on the UE.

    In salted mode a fresh nonce is drawn per commitment and kept here; the
    VMNO receives it with the off-chain CDR exchange.
    """

    salted: bool = False
    rng: secrets.SystemRandom | object = field(default_factory=secrets.SystemRandom)
    nonces: dict[str, int] = field(default_factory=dict)

    def commit(self, record: UsageRecord, session_id: str | None = None) -> Commitment:
        if not self.salted:
            return tee_commit(record)
        nonce = self.rng.randrange(MODULUS)
        if session_id is not None:
            self.nonces[session_id] = nonce
        return tee_commit(record, nonce=nonce)


def _check(record: UsageRecord) -> None:
    for value in record.as_tuple():
        if not 0 <= value < METRIC_LIMIT:
            raise RangeViolation(f"metric {value} outside [0, 2^{METRIC_BITS})")


def commit_value(record: UsageRecord, nonce: int | None = None) -> int:
    _check(record)
    if nonce is None:
        return hash_ints(record.as_tuple(), default_params(4))
    return hash_ints((*record.as_tuple(), nonce % MODULUS), default_params(5))


def tee_commit(record: UsageRecord, nonce: int | None = None) -> Commitment:
    """h_cdr = Poseidon(n_sms, n_mb, n_min), or with a fourth nonce input when salted."""
    return Commitment(commit_value(record, nonce), _token=_TEE_TOKEN)


def open_matches(record: UsageRecord, commitment: Commitment, nonce: int | None = None) -> bool:
    try:
        return commit_value(record, nonce) == commitment.h_cdr.value
    except RangeViolation:
        return False
