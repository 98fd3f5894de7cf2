"""Rank-1 constraint system for roaming billing.

The circuit proves, for private usage ``(n_sms, n_mb, n_min)`` and public
``(total, h_cdr)``:

* ``total = n_sms*r_sms + n_mb*r_mb + n_min*r_voice`` with the rates compiled
  in as constants,
* ``Poseidon(n_sms, n_mb, n_min) = h_cdr``,
* each metric fits in ``range_bits`` bits, so the linear billing form cannot
  wrap around the field modulus.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from .cdr import METRIC_BITS, Commitment, UsageRecord, commit_value
from .errors import HashMismatch, ParameterMismatch, RangeViolation, TotalMismatch
from .field import MODULUS, FieldElement
from .poseidon import PoseidonParams, default_params

P = MODULUS
LC = Dict[int, int]  # variable index -> coefficient; index 0 is the constant one
ONE = 0


@dataclass(frozen=True)
class RateSchedule:
    """Per-unit prices in the smallest currency unit."""

    r_sms: int
    r_mb: int
    r_voice: int

    def __post_init__(self):
        for name in ("r_sms", "r_mb", "r_voice"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v < 1 << 32:
                raise RangeViolation(f"{name}={v!r} must be an integer in [0, 2^32)")
        if ((1 << METRIC_BITS) - 1) * (self.r_sms + self.r_mb + self.r_voice) >= P:
            raise RangeViolation("rate schedule could overflow the field")

    def to_json(self) -> dict:
        return {"r_sms": self.r_sms, "r_mb": self.r_mb, "r_voice": self.r_voice}

    @classmethod
    def from_json(cls, data: dict) -> "RateSchedule":
        unknown = set(data) - {"r_sms", "r_mb", "r_voice"}
        if unknown:
            raise ValueError(f"unknown rate fields {sorted(unknown)}")
        return cls(int(data["r_sms"]), int(data["r_mb"]), int(data["r_voice"]))


@dataclass(frozen=True)
class PublicInputs:
    total: int
    h_cdr: FieldElement

    LAYOUT = ("total", "h_cdr")

    def as_list(self) -> list[int]:
        return [self.total % P, self.h_cdr.value]


@dataclass
class Witness:
    n_sms: int
    n_mb: int
    n_min: int
    # full assignment vector, constant one and public inputs included
    auxiliary: list[int] = field(repr=False)
    nonce: Optional[int] = None


def compute_total(record: UsageRecord, rates: RateSchedule) -> int:
    """Exact integer billing amount."""
    for v in record.as_tuple():
        if not 0 <= v < 1 << METRIC_BITS:
            raise RangeViolation(f"metric {v} out of range")
    return record.n_sms * rates.r_sms + record.n_mb * rates.r_mb + record.n_min * rates.r_voice


# -- builder -----------------------------------------------------------------


class _Builder:
    def __init__(self):
        self.num_vars = 1
        self.labels: list[str] = ["one"]
        self.constraints: list[Tuple[LC, LC, LC]] = []
        # how to compute each non-input variable: ("mul", constraint) or ("bit", var, k)
        self.hints: Dict[int, tuple] = {}

    def var(self, label: str) -> int:
        idx = self.num_vars
        self.num_vars += 1
        self.labels.append(label)
        return idx

    def enforce(self, a: LC, b: LC, c: LC) -> int:
        self.constraints.append((_clean(a), _clean(b), _clean(c)))
        return len(self.constraints) - 1

    def mul(self, a: LC, b: LC, label: str) -> LC:
        out = self.var(label)
        k = self.enforce(a, b, {out: 1})
        self.hints[out] = ("mul", k)
        return {out: 1}


def _clean(lc: LC) -> LC:
    return {k: v % P for k, v in lc.items() if v % P}


def _lc_add(a: LC, b: LC, scale: int = 1) -> LC:
    out = dict(a)
    for k, v in b.items():
        out[k] = (out.get(k, 0) + scale * v) % P
    return {k: v for k, v in out.items() if v}


def _lc_scale(a: LC, s: int) -> LC:
    s %= P
    return {k: v * s % P for k, v in a.items()} if s else {}


def _sbox(b: _Builder, x: LC, tag: str) -> LC:
    # x^5 with three multiplications
    x2 = b.mul(x, x, f"{tag}.x2")
    x4 = b.mul(x2, x2, f"{tag}.x4")
    return b.mul(x4, x, f"{tag}.x5")


def poseidon_gadget(b: _Builder, inputs: Sequence[LC], params: PoseidonParams) -> LC:
    """In-circuit Poseidon hash; returns the digest as a linear combination."""
    if len(inputs) != params.rate:
        raise ParameterMismatch(
            f"Poseidon width {params.t} cannot absorb {len(inputs)} inputs in one permutation"
        )
    state: List[LC] = [{}] + [dict(x) for x in inputs]
    half = params.full_rounds // 2
    rc = params.round_constants
    t = params.t
    for r in range(params.rounds):
        state = [_lc_add(state[i], {ONE: rc[r * t + i]}) for i in range(t)]
        full = r < half or r >= half + params.partial_rounds
        for i in range(t if full else 1):
            state[i] = _sbox(b, state[i], f"r{r}.s{i}")
        mixed = []
        for row in params.mds:
            acc: LC = {}
            for m, lc in zip(row, state):
                acc = _lc_add(acc, lc, m)
            mixed.append(acc)
        state = mixed
    return state[0]


def _range_check(b: _Builder, var: int, bits: int, name: str) -> None:
    recomposed: LC = {}
    for k in range(bits):
        bit = b.var(f"{name}.b{k}")
        b.hints[bit] = ("bit", var, k)
        b.enforce({bit: 1}, {bit: 1, ONE: -1}, {})
        recomposed[bit] = 1 << k
    b.enforce(_lc_add(recomposed, {var: 1}, -1), {ONE: 1}, {})


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    constraints: tuple
    num_vars: int
    num_public: int
    public_input_layout: tuple[str, ...]
    rate_constants: RateSchedule
    salted: bool
    range_bits: int
    labels: tuple[str, ...]
    hints: dict
    params_t: int

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def descriptor(self) -> dict:
        return circuit_descriptor(self.rate_constants, self.salted, self.range_bits)

    def descriptor_digest(self) -> bytes:
        return descriptor_digest(self.descriptor())

    def residuals(self, assignment: Sequence[int]) -> list[int]:
        """Indices of violated constraints (empty iff satisfied)."""
        if len(assignment) != self.num_vars:
            raise ParameterMismatch(
                f"assignment has {len(assignment)} entries, system has {self.num_vars} variables"
            )
        bad = []
        for i, (a, bb, c) in enumerate(self.constraints):
            va = sum(assignment[k] * v for k, v in a.items()) % P
            vb = sum(assignment[k] * v for k, v in bb.items()) % P
            vc = sum(assignment[k] * v for k, v in c.items()) % P
            if va * vb % P != vc:
                bad.append(i)
        return bad

    def is_satisfied(self, public: PublicInputs, witness: Witness) -> bool:
        return not self.residuals(self.full_assignment(public, witness))

    def full_assignment(self, public: PublicInputs, witness: Witness) -> list[int]:
        z = list(witness.auxiliary)
        z[0] = 1
        z[1:1 + self.num_public] = public.as_list()
        return z


def circuit_descriptor(rates: RateSchedule, salted: bool = False, range_bits: int = METRIC_BITS) -> dict:
    return {"rates": rates.to_json(), "salted": bool(salted), "range_bits": int(range_bits)}


def descriptor_digest(descriptor: dict) -> bytes:
    blob = json.dumps(descriptor, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).digest()


def build_constraints(
    rates: RateSchedule,
    params: PoseidonParams | None = None,
    salted: bool = False,
    range_bits: int = METRIC_BITS,
) -> ConstraintSystem:
    """Compile the billing statement for one rate schedule."""
    arity = 4 if salted else 3
    if params is None:
        params = default_params(arity + 1)
    if params.t != arity + 1:
        raise ParameterMismatch(f"{arity}-input hash needs width {arity + 1}, params have t={params.t}")
    return _build(rates, params, salted, range_bits)


def _build(rates: RateSchedule, params: PoseidonParams, salted: bool, range_bits: int) -> ConstraintSystem:
    b = _Builder()
    total = b.var("total")
    h_cdr = b.var("h_cdr")
    metrics = [b.var("n_sms"), b.var("n_mb"), b.var("n_min")]
    hashed = [{m: 1} for m in metrics]
    if salted:
        nonce = b.var("nonce")
        hashed.append({nonce: 1})
    for m, name in zip(metrics, ("n_sms", "n_mb", "n_min")):
        _range_check(b, m, range_bits, name)
    # billing
    linear = {metrics[0]: rates.r_sms, metrics[1]: rates.r_mb, metrics[2]: rates.r_voice}
    b.enforce(linear, {ONE: 1}, {total: 1})
    # hash consistency
    digest = poseidon_gadget(b, hashed, params)
    b.enforce(digest, {ONE: 1}, {h_cdr: 1})
    return ConstraintSystem(
        constraints=tuple(b.constraints),
        num_vars=b.num_vars,
        num_public=2,
        public_input_layout=PublicInputs.LAYOUT,
        rate_constants=rates,
        salted=salted,
        range_bits=range_bits,
        labels=tuple(b.labels),
        hints=b.hints,
        params_t=params.t,
    )


@lru_cache(maxsize=8)
def _layout(salted: bool, range_bits: int) -> ConstraintSystem:
    # the variable layout and hints do not depend on the rates
    return build_constraints(RateSchedule(0, 0, 0), salted=salted, range_bits=range_bits)


def assign(
    record_values: Sequence[int],
    total: int,
    h_cdr: int,
    nonce: Optional[int] = None,
    salted: bool = False,
    range_bits: int = METRIC_BITS,
) -> list[int]:
    """Fill every wire from the raw inputs, without checking any constraint."""
    cs = _layout(salted, range_bits)
    z = [0] * cs.num_vars
    z[0] = 1
    z[1] = total % P
    z[2] = h_cdr % P
    z[3:6] = [v % P for v in record_values]
    if salted:
        z[6] = (nonce or 0) % P
    constraints = cs.constraints
    for var in sorted(cs.hints):
        hint = cs.hints[var]
        if hint[0] == "bit":
            z[var] = (z[hint[1]] >> hint[2]) & 1
        else:
            a, bb, _ = constraints[hint[1]]
            va = sum(z[k] * v for k, v in a.items()) % P
            vb = sum(z[k] * v for k, v in bb.items()) % P
            z[var] = va * vb % P
    return z


def synthesize_witness(
    record: UsageRecord,
    rates: RateSchedule,
    h_cdr: Commitment,
    nonce: Optional[int] = None,
    range_bits: int = METRIC_BITS,
) -> tuple[Witness, PublicInputs]:
    """Prover-side assertions, then witness generation.

    Raises :class:`HashMismatch` when the record does not open ``h_cdr`` and
    :class:`TotalMismatch` when the billing form cannot be reproduced.
    """
    salted = nonce is not None
    h_check = commit_value(record, nonce)
    if h_check != h_cdr.h_cdr.value:
        raise HashMismatch("usage record does not match the committed hash")
    total = compute_total(record, rates)
    return _witness(record, total, h_cdr.h_cdr.value, nonce, salted, range_bits)


def synthesize_claim(
    record: UsageRecord,
    rates: RateSchedule,
    h_cdr: Commitment,
    total: int,
    nonce: Optional[int] = None,
) -> tuple[Witness, PublicInputs]:
    """Same as :func:`synthesize_witness` but for an externally declared total."""
    witness, public = synthesize_witness(record, rates, h_cdr, nonce)
    if public.total != total:
        raise TotalMismatch(f"declared total {total} != computed {public.total}")
    return witness, public


def _witness(record, total, h, nonce, salted, range_bits):
    z = assign(record.as_tuple(), total, h, nonce, salted, range_bits)
    witness = Witness(record.n_sms, record.n_mb, record.n_min, z, nonce)
    return witness, PublicInputs(total, FieldElement(h))


def unchecked_witness(
    values: Sequence[int], total: int, h_cdr: int, nonce: Optional[int] = None
) -> tuple[Witness, PublicInputs]:
    """Witness for arbitrary (possibly dishonest) values; used by adversaries and tests."""
    salted = nonce is not None
    z = assign(values, total, h_cdr, nonce, salted)
    return Witness(*[int(v) for v in values], z, nonce), PublicInputs(total, FieldElement(h_cdr))
