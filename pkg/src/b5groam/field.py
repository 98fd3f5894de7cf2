"""Arithmetic in the BN254 scalar field.

Circuits, Poseidon and the proof system all operate over this field, so the
modulus lives here and everything else imports it.
"""

from __future__ import annotations

from typing import Literal, Union

from .errors import InverseOfZero

# BN254 (alt_bn128) group order r
MODULUS = 21888242871839275222246405745257275088548364400416034343698204186575808495617
FIELD_BYTES = 32


def inv(a: int) -> int:
    """Modular inverse via the extended Euclidean algorithm."""
    a %= MODULUS
    if a == 0:
        raise InverseOfZero("0 has no multiplicative inverse")
    return pow(a, -1, MODULUS)


class FieldElement:
    """An immutable element of the scalar field."""

    __slots__ = ("value",)

    def __init__(self, value: Union[int, "FieldElement"]):
        if isinstance(value, FieldElement):
            value = value.value
        object.__setattr__(self, "value", int(value) % MODULUS)

    def __setattr__(self, name, value):
        raise AttributeError("FieldElement is immutable")

    @staticmethod
    def _coerce(other) -> int:
        if isinstance(other, FieldElement):
            return other.value
        if isinstance(other, int):
            return other % MODULUS
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.value + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.value - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(o - self.value)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.value * o)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value)

    def __pow__(self, exponent: int):
        if exponent < 0:
            return FieldElement(pow(inv(self.value), -exponent, MODULUS))
        return FieldElement(pow(self.value, exponent, MODULUS))

    def inverse(self) -> "FieldElement":
        return FieldElement(inv(self.value))

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.value * inv(o))

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.value == other.value
        if isinstance(other, int):
            return self.value == other % MODULUS
        return NotImplemented

    def __hash__(self):
        return hash(self.value)

    def __int__(self):
        return self.value

    def __index__(self):
        return self.value

    def __repr__(self):
        return f"FieldElement({self.value})"

    def to_hex(self) -> str:
        """0x-prefixed, big-endian, fixed 32-byte width."""
        return "0x" + self.value.to_bytes(FIELD_BYTES, "big").hex()

    @classmethod
    def from_hex(cls, text: str) -> "FieldElement":
        value = int(text, 16)
        if value >= MODULUS:
            raise ValueError(f"{text} is not a canonical field element")
        return cls(value)


Op = Literal["add", "sub", "mul", "inv"]


def field_arith(a, b, op: Op) -> FieldElement:
    """Apply ``op`` to ``a`` and ``b``; ``inv`` ignores ``b`` and inverts ``a``."""
    a = FieldElement(a)
    b = FieldElement(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "inv":
        return a.inverse()
    raise ValueError(f"unknown field operation {op!r}")
