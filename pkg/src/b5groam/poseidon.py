"""Poseidon permutation and fixed-width hashing over the BN254 scalar field.

Round constants come from the Grain LFSR in self-shrinking mode, seeded by
the 80-bit descriptor of (field, S-box, bit length, width, rounds). The MDS
matrix is the Cauchy matrix ``1 / (x_i + y_j)`` with ``x = 0..t-1`` and
``y = t..2t-1``. Both are deterministic, so the shipped JSON fixtures can be
regenerated bit-for-bit with :func:`generate_params`.

Hash layout: the capacity element sits at index 0 and is initialised to zero,
inputs fill indices ``1..t-1`` and the digest is ``state[0]`` after the
permutation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ParameterMismatch, WidthMismatch
from .field import MODULUS, FieldElement

# width -> (full rounds, partial rounds) at the 128-bit level, alpha = 5
ROUNDS_128 = {2: (8, 56), 3: (8, 57), 4: (8, 56), 5: (8, 60), 6: (8, 60)}
SBOX_FLAGS = {3: 0, 5: 1, -1: 2}


@dataclass(frozen=True)
class PoseidonParams:
    modulus: int
    t: int
    full_rounds: int
    partial_rounds: int
    mds: tuple[tuple[int, ...], ...]
    round_constants: tuple[int, ...]
    alpha: int = 5

    def __post_init__(self):
        if self.full_rounds % 2:
            raise ParameterMismatch("full_rounds must be even")
        if len(self.mds) != self.t or any(len(row) != self.t for row in self.mds):
            raise ParameterMismatch("mds must be t x t")
        expected = self.t * (self.full_rounds + self.partial_rounds)
        if len(self.round_constants) != expected:
            raise ParameterMismatch(
                f"expected {expected} round constants, got {len(self.round_constants)}"
            )
        if _det(self.mds, self.modulus) == 0:
            raise ParameterMismatch("mds matrix is singular")

    @property
    def rounds(self) -> int:
        return self.full_rounds + self.partial_rounds

    @property
    def rate(self) -> int:
        return self.t - 1

    def to_json(self) -> dict:
        return {
            "modulus": hex(self.modulus),
            "t": self.t,
            "full_rounds": self.full_rounds,
            "partial_rounds": self.partial_rounds,
            "alpha": self.alpha,
            "mds": [[hex(v) for v in row] for row in self.mds],
            "round_constants": [hex(v) for v in self.round_constants],
        }

    @classmethod
    def from_json(cls, data: dict) -> "PoseidonParams":
        return cls(
            modulus=int(data["modulus"], 16),
            t=int(data["t"]),
            full_rounds=int(data["full_rounds"]),
            partial_rounds=int(data["partial_rounds"]),
            alpha=int(data["alpha"]),
            mds=tuple(tuple(int(v, 16) for v in row) for row in data["mds"]),
            round_constants=tuple(int(v, 16) for v in data["round_constants"]),
        )


def _det(matrix: Sequence[Sequence[int]], p: int) -> int:
    m = [list(row) for row in matrix]
    n = len(m)
    det = 1
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] % p), None)
        if pivot is None:
            return 0
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det = det * m[col][col] % p
        inv_p = pow(m[col][col], -1, p)
        for r in range(col + 1, n):
            f = m[r][col] * inv_p % p
            if f:
                m[r] = [(a - f * b) % p for a, b in zip(m[r], m[col])]
    return det % p


class _Grain:
    """80-bit Grain LFSR in self-shrinking mode."""

    def __init__(self, seed_bits: list[int]):
        assert len(seed_bits) == 80
        self.bits = list(seed_bits)
        for _ in range(160):
            self._clock()

    def _clock(self) -> int:
        b = self.bits
        new = b[62] ^ b[51] ^ b[38] ^ b[23] ^ b[13] ^ b[0]
        b.pop(0)
        b.append(new)
        return new

    def next_bit(self) -> int:
        while True:
            first = self._clock()
            second = self._clock()
            if first:
                return second

    def next_int(self, n_bits: int) -> int:
        v = 0
        for _ in range(n_bits):
            v = (v << 1) | self.next_bit()
        return v


def grain_seed(p: int, t: int, full_rounds: int, partial_rounds: int, alpha: int = 5) -> list[int]:
    """The 80-bit LFSR seed for a parameter set (the published seed string)."""

    def bits(value: int, width: int) -> list[int]:
        return [int(c) for c in format(value, f"0{width}b")]

    return (
        bits(1, 2)  # prime field
        + bits(SBOX_FLAGS.get(alpha, 3), 4)
        + bits(p.bit_length(), 12)
        + bits(t, 12)
        + bits(full_rounds, 10)
        + bits(partial_rounds, 10)
        + [1] * 30
    )


def generate_params(t: int = 4, alpha: int = 5, p: int = MODULUS) -> PoseidonParams:
    """Derive a parameter set deterministically from ``(p, t)`` at 128-bit security."""
    if t not in ROUNDS_128:
        raise ParameterMismatch(f"no round numbers recorded for width {t}")
    rf, rp = ROUNDS_128[t]
    grain = _Grain(grain_seed(p, t, rf, rp, alpha))
    n = p.bit_length()
    constants = []
    for _ in range(t * (rf + rp)):
        c = grain.next_int(n)
        while c >= p:
            c = grain.next_int(n)
        constants.append(c)
    xs = range(t)
    ys = range(t, 2 * t)
    mds = tuple(tuple(pow(x + y, -1, p) for y in ys) for x in xs)
    return PoseidonParams(p, t, rf, rp, mds, tuple(constants), alpha)


def load_params(path: str | Path) -> PoseidonParams:
    return PoseidonParams.from_json(json.loads(Path(path).read_text()))


def save_params(params: PoseidonParams, path: str | Path) -> None:
    Path(path).write_text(json.dumps(params.to_json(), indent=1) + "\n")


@lru_cache(maxsize=None)
def default_params(t: int = 4) -> PoseidonParams:
    """Parameters for width ``t`` read from the fixture shipped with the package."""
    name = f"poseidon_bn254_t{t}.json"
    res = resources.files("b5groam").joinpath("data").joinpath(name)
    if res.is_file():
        return PoseidonParams.from_json(json.loads(res.read_text()))
    return generate_params(t)


def permute_ints(state: Sequence[int], params: PoseidonParams) -> list[int]:
    """Permutation on plain ints already reduced mod p (hot path)."""
    t = params.t
    p = params.modulus
    mds = params.mds
    rc = params.round_constants
    half = params.full_rounds // 2
    s = list(state)
    k = 0
    for r in range(params.rounds):
        s = [(s[i] + rc[k + i]) % p for i in range(t)]
        k += t
        if r < half or r >= half + params.partial_rounds:
            s = [pow(x, params.alpha, p) for x in s]
        else:
            s[0] = pow(s[0], params.alpha, p)
        s = [sum(m * x for m, x in zip(row, s)) % p for row in mds]
    return s


def poseidon_permutation(state: Sequence, params: PoseidonParams) -> list[FieldElement]:
    if len(state) != params.t:
        raise WidthMismatch(f"state has {len(state)} elements, params expect {params.t}")
    out = permute_ints([int(FieldElement(x)) for x in state], params)
    return [FieldElement(v) for v in out]


def hash_ints(inputs: Iterable[int], params: PoseidonParams | None = None) -> int:
    values = [int(v) % MODULUS for v in inputs]
    params = params or default_params(len(values) + 1)
    if len(values) != params.rate:
        raise WidthMismatch(f"{len(values)} inputs for a width-{params.t} permutation")
    return permute_ints([0, *values], params)[0]


def poseidon_hash3(x1, x2, x3, params: PoseidonParams | None = None) -> FieldElement:
    """Fixed three-input hash (one capacity element)."""
    return FieldElement(hash_ints((int(FieldElement(x)) for x in (x1, x2, x3)), params or default_params(4)))


def poseidon_hash4(x1, x2, x3, x4, params: PoseidonParams | None = None) -> FieldElement:
    return FieldElement(
        hash_ints((int(FieldElement(x)) for x in (x1, x2, x3, x4)), params or default_params(5))
    )
