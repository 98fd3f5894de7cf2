import pytest
from hypothesis import given, settings, strategies as st

from b5groam.errors import InverseOfZero
from b5groam.field import MODULUS, FieldElement, field_arith, inv

elements = st.integers(min_value=0, max_value=MODULUS - 1)
nonzero = st.integers(min_value=1, max_value=MODULUS - 1)


def test_identities():
    a = FieldElement(123456789)
    assert field_arith(a, 0, "add") == a
    assert field_arith(a, 1, "mul") == a
    assert field_arith(a, a, "sub") == 0


def test_reduction_into_range():
    assert FieldElement(MODULUS).value == 0
    assert FieldElement(-1).value == MODULUS - 1
    assert FieldElement(MODULUS + 5) == 5


@given(nonzero)
def test_inverse_matches_euclid(a):
    # pow(a, -1, p) is CPython's extended-Euclid inverse
    assert inv(a) == pow(a, -1, MODULUS)
    assert field_arith(a, field_arith(a, 0, "inv"), "mul") == 1


def test_inverse_of_zero():
    with pytest.raises(InverseOfZero):
        field_arith(0, 0, "inv")
    with pytest.raises(InverseOfZero):
        FieldElement(0) / FieldElement(0)


@settings(max_examples=1000)
@given(elements, elements)
def test_commutativity(a, b):
    assert field_arith(a, b, "add") == field_arith(b, a, "add")
    assert field_arith(a, b, "mul") == field_arith(b, a, "mul")


@given(elements, elements, elements)
def test_associativity_and_closure(a, b, c):
    x, y, z = FieldElement(a), FieldElement(b), FieldElement(c)
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert 0 <= (x * y + z).value < MODULUS


@given(elements)
def test_hex_round_trip(a):
    fe = FieldElement(a)
    text = fe.to_hex()
    assert text.startswith("0x") and len(text) == 66
    assert FieldElement.from_hex(text) == fe


def test_unknown_op():
    with pytest.raises(ValueError):
        field_arith(1, 2, "div")
