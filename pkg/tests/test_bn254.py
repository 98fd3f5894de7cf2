import random

import pytest
from hypothesis import given, settings, strategies as st
from py_ecc import bn128

from b5groam import bn254
from b5groam.bn254 import (
    G1_GEN,
    G2_GEN,
    FixedBase,
    R,
    final_exponentiation,
    final_exponentiation_naive,
    g1_add,
    g1_compress,
    g1_decompress,
    g1_mul,
    g1_neg,
    g1_on_curve,
    g2_add,
    g2_compress,
    g2_decompress,
    g2_in_subgroup,
    g2_mul,
    g2_on_curve,
    miller_loop,
    pairing,
    pairing_product_is_one,
    prepare_g2,
)

scalars = st.integers(1, R - 1)


def _ecc_g1(pt):
    return None if pt is None else (int(pt[0].n), int(pt[1].n))


def _ecc_g2(pt):
    return None if pt is None else tuple((int(c.coeffs[0]), int(c.coeffs[1])) for c in pt)


def _ours_g2(pt):
    return None if pt is None else tuple((int(c[0]), int(c[1])) for c in pt)


@settings(max_examples=25)
@given(scalars)
def test_g1_mul_matches_py_ecc(k):
    ours = g1_mul(G1_GEN, k)
    assert (int(ours[0]), int(ours[1])) == _ecc_g1(bn128.multiply(bn128.G1, k))
    assert g1_on_curve(ours)


@settings(max_examples=10)
@given(scalars)
def test_g2_mul_matches_py_ecc(k):
    assert _ours_g2(g2_mul(G2_GEN, k)) == _ecc_g2(bn128.multiply(bn128.G2, k))


@settings(max_examples=25)
@given(scalars, scalars)
def test_g1_add_matches_py_ecc(a, b):
    ours = g1_add(g1_mul(G1_GEN, a), g1_mul(G1_GEN, b))
    ref = bn128.add(bn128.multiply(bn128.G1, a), bn128.multiply(bn128.G1, b))
    assert (int(ours[0]), int(ours[1])) == _ecc_g1(ref)


def test_group_edge_cases():
    p = g1_mul(G1_GEN, 5)
    assert g1_add(p, g1_neg(p)) is None
    assert g1_add(None, p) == p
    assert g1_add(p, p) == g1_mul(G1_GEN, 10)
    assert g1_mul(G1_GEN, R) is None
    q = g2_mul(G2_GEN, 7)
    assert g2_add(q, q) == g2_mul(G2_GEN, 14)
    assert g2_on_curve(q) and g2_in_subgroup(q)


@settings(max_examples=20)
@given(scalars)
def test_fixed_base_matches_double_and_add(k):
    assert FixedBase(G1_GEN, 1).mul(k) == g1_mul(G1_GEN, k)


def test_fixed_base_many_g2():
    fb = FixedBase(G2_GEN, 2)
    ks = [0, 1, 2, R - 1, 123456789]
    assert fb.mul_many(ks) == [None if k == 0 else g2_mul(G2_GEN, k) for k in ks]


def test_pairing_bilinear_and_nondegenerate():
    rng = random.Random(2)
    a, b = rng.randrange(1, R), rng.randrange(1, R)
    e = pairing(G1_GEN, G2_GEN)
    assert e != bn254.F12_ONE
    assert pairing(g1_mul(G1_GEN, a), g2_mul(G2_GEN, b)) == pairing(g1_mul(G1_GEN, a * b % R), G2_GEN)
    assert pairing_product_is_one([(g1_mul(G1_GEN, a), prepare_g2(G2_GEN)), (g1_neg(G1_GEN), prepare_g2(g2_mul(G2_GEN, a)))])


def test_fast_final_exponentiation_matches_naive():
    f = miller_loop([(g1_mul(G1_GEN, 3), prepare_g2(G2_GEN))])
    assert final_exponentiation(f) == final_exponentiation_naive(f)


@settings(max_examples=25)
@given(scalars)
def test_compression_round_trip(k):
    p = g1_mul(G1_GEN, k)
    data = g1_compress(p)
    assert len(data) == 32 and g1_decompress(data) == p
    q = g2_mul(G2_GEN, k)
    data2 = g2_compress(q)
    assert len(data2) == 64 and g2_decompress(data2) == q


def test_compression_infinity_and_garbage():
    assert g1_decompress(g1_compress(None)) is None
    assert g2_decompress(g2_compress(None)) is None
    with pytest.raises(ValueError):
        g1_decompress(b"\x00" * 31)
    with pytest.raises(ValueError):
        g1_decompress(b"\x3f" + b"\xff" * 31)  # x >= p
