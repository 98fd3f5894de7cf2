"""BN254 (alt_bn128) groups, optimal ate pairing and multi-scalar multiplication.

Field towers: Fp2 = Fp[i]/(i^2 + 1), Fp6 = Fp2[v]/(v^3 - xi) with xi = 9 + i,
Fp12 = Fp6[w]/(w^2 - v). G2 lives on the D-type sextic twist
y^2 = x^3 + 3/xi. Elements are plain tuples of gmpy2 integers; points are
affine tuples with ``None`` for infinity, or Jacobian triples internally.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

from gmpy2 import invert, mpz

P = mpz(21888242871839275222246405745257275088696311157297823662689037894645226208583)
R = 21888242871839275222246405745257275088548364400416034343698204186575808495617
U = 4965661367192848881
ATE_LOOP = 6 * U + 2
ATE_BITS = [int(c) for c in bin(ATE_LOOP)[3:]]

Fp2 = Tuple[mpz, mpz]
G1Affine = Optional[Tuple[mpz, mpz]]
G2Affine = Optional[Tuple[Fp2, Fp2]]

_0 = mpz(0)
_1 = mpz(1)

# -- Fp2 ---------------------------------------------------------------------


def f2(a, b=0) -> Fp2:
    return (mpz(a) % P, mpz(b) % P)


F2_ZERO = (_0, _0)
F2_ONE = (_1, _0)


def f2_add(x, y):
    return ((x[0] + y[0]) % P, (x[1] + y[1]) % P)


def f2_sub(x, y):
    return ((x[0] - y[0]) % P, (x[1] - y[1]) % P)


def f2_neg(x):
    return (-x[0] % P, -x[1] % P)


def f2_mul(x, y):
    a0, a1 = x
    b0, b1 = y
    t0 = a0 * b0
    t1 = a1 * b1
    return ((t0 - t1) % P, ((a0 + a1) * (b0 + b1) - t0 - t1) % P)


def f2_sqr(x):
    a, b = x
    return ((a + b) * (a - b) % P, 2 * a * b % P)


def f2_scale(x, k):
    return (x[0] * k % P, x[1] * k % P)


def f2_mul_xi(x):
    a, b = x
    return ((9 * a - b) % P, (a + 9 * b) % P)


def f2_inv(x):
    a, b = x
    d = invert(a * a + b * b, P)
    return (a * d % P, -b * d % P)


def f2_conj(x):
    return (x[0], -x[1] % P)


def f2_pow(x, e: int):
    out = F2_ONE
    base = x
    while e:
        if e & 1:
            out = f2_mul(out, base)
        base = f2_sqr(base)
        e >>= 1
    return out


def f2_sqrt(a) -> Optional[Fp2]:
    """Square root for p = 3 mod 4, or None for non-residues."""
    if a == F2_ZERO:
        return F2_ZERO
    a1 = f2_pow(a, (P - 3) // 4)
    alpha = f2_mul(f2_sqr(a1), a)
    a0 = f2_mul(f2_pow(alpha, P), alpha)
    if a0 == (P - 1, _0):
        return None
    x0 = f2_mul(a1, a)
    if alpha == (P - 1, _0):
        x = f2_mul((_0, _1), x0)
    else:
        b = f2_pow(f2_add(F2_ONE, alpha), (P - 1) // 2)
        x = f2_mul(b, x0)
    return x if f2_sqr(x) == a else None


XI = f2(9, 1)

# -- Fp6 ---------------------------------------------------------------------

F6_ZERO = (F2_ZERO, F2_ZERO, F2_ZERO)
F6_ONE = (F2_ONE, F2_ZERO, F2_ZERO)


def f6_add(x, y):
    return (f2_add(x[0], y[0]), f2_add(x[1], y[1]), f2_add(x[2], y[2]))


def f6_sub(x, y):
    return (f2_sub(x[0], y[0]), f2_sub(x[1], y[1]), f2_sub(x[2], y[2]))


def f6_neg(x):
    return (f2_neg(x[0]), f2_neg(x[1]), f2_neg(x[2]))


def f6_mul(x, y):
    a0, a1, a2 = x
    b0, b1, b2 = y
    t0 = f2_mul(a0, b0)
    t1 = f2_mul(a1, b1)
    t2 = f2_mul(a2, b2)
    c0 = f2_add(t0, f2_mul_xi(f2_sub(f2_sub(f2_mul(f2_add(a1, a2), f2_add(b1, b2)), t1), t2)))
    c1 = f2_add(f2_sub(f2_sub(f2_mul(f2_add(a0, a1), f2_add(b0, b1)), t0), t1), f2_mul_xi(t2))
    c2 = f2_add(f2_sub(f2_sub(f2_mul(f2_add(a0, a2), f2_add(b0, b2)), t0), t2), t1)
    return (c0, c1, c2)


def f6_mul_v(x):
    return (f2_mul_xi(x[2]), x[0], x[1])


def f6_scale_fp(x, k):
    return (f2_scale(x[0], k), f2_scale(x[1], k), f2_scale(x[2], k))


def f6_mul_01(x, b0, b1):
    """Multiply by the sparse element b0 + b1*v."""
    a0, a1, a2 = x
    t0 = f2_mul(a0, b0)
    t1 = f2_mul(a1, b1)
    c0 = f2_add(t0, f2_mul_xi(f2_mul(a2, b1)))
    c1 = f2_sub(f2_sub(f2_mul(f2_add(a0, a1), f2_add(b0, b1)), t0), t1)
    c2 = f2_add(f2_mul(a2, b0), t1)
    return (c0, c1, c2)


def f6_inv(x):
    a0, a1, a2 = x
    A = f2_sub(f2_sqr(a0), f2_mul_xi(f2_mul(a1, a2)))
    B = f2_sub(f2_mul_xi(f2_sqr(a2)), f2_mul(a0, a1))
    C = f2_sub(f2_sqr(a1), f2_mul(a0, a2))
    F = f2_add(f2_mul(a0, A), f2_mul_xi(f2_add(f2_mul(a2, B), f2_mul(a1, C))))
    Fi = f2_inv(F)
    return (f2_mul(A, Fi), f2_mul(B, Fi), f2_mul(C, Fi))


# -- Fp12 --------------------------------------------------------------------

F12_ONE = (F6_ONE, F6_ZERO)


def f12_mul(x, y):
    g1, h1 = x
    g2, h2 = y
    t0 = f6_mul(g1, g2)
    t1 = f6_mul(h1, h2)
    c1 = f6_sub(f6_sub(f6_mul(f6_add(g1, h1), f6_add(g2, h2)), t0), t1)
    return (f6_add(t0, f6_mul_v(t1)), c1)


def f12_sqr(x):
    g, h = x
    gh = f6_mul(g, h)
    c0 = f6_sub(f6_sub(f6_mul(f6_add(g, h), f6_add(g, f6_mul_v(h))), gh), f6_mul_v(gh))
    return (c0, f6_add(gh, gh))


def f12_inv(x):
    g, h = x
    d = f6_inv(f6_sub(f6_mul(g, g), f6_mul_v(f6_mul(h, h))))
    return (f6_mul(g, d), f6_neg(f6_mul(h, d)))


def f12_conj(x):
    return (x[0], f6_neg(x[1]))


# w^(e(p-1)) = xi^(e(p-1)/6)
_FROB = [f2_pow(XI, e * (P - 1) // 6) for e in range(6)]


def f12_frob(x):
    g, h = x
    g0, g1, g2 = g
    h0, h1, h2 = h
    return (
        (f2_conj(g0), f2_mul(f2_conj(g1), _FROB[2]), f2_mul(f2_conj(g2), _FROB[4])),
        (f2_mul(f2_conj(h0), _FROB[1]), f2_mul(f2_conj(h1), _FROB[3]), f2_mul(f2_conj(h2), _FROB[5])),
    )


def f12_pow(x, e: int):
    if e < 0:
        return f12_pow(f12_inv(x), -e)
    out = F12_ONE
    for bit in bin(e)[2:]:
        out = f12_sqr(out)
        if bit == "1":
            out = f12_mul(out, x)
    return out


def f12_mul_line(f, l0, l1, l2):
    """f * (l0 + (l1 + l2*v) w) with l0 in Fp and l1, l2 in Fp2."""
    g, h = f
    return (
        f6_add(f6_scale_fp(g, l0), f6_mul_v(f6_mul_01(h, l1, l2))),
        f6_add(f6_mul_01(g, l1, l2), f6_scale_fp(h, l0)),
    )


# -- G1 ----------------------------------------------------------------------

B1 = mpz(3)
G1_GEN: G1Affine = (mpz(1), mpz(2))


def g1_on_curve(pt: G1Affine) -> bool:
    if pt is None:
        return True
    x, y = pt
    return (y * y - x * x * x - B1) % P == 0


def g1_neg(pt: G1Affine) -> G1Affine:
    return None if pt is None else (pt[0], -pt[1] % P)


def _j1_double(X, Y, Z):
    if Z == 0 or Y == 0:
        return (_1, _1, _0)
    A = X * X % P
    B = Y * Y % P
    C = B * B % P
    D = 2 * ((X + B) ** 2 - A - C) % P
    E = 3 * A % P
    X3 = (E * E - 2 * D) % P
    Y3 = (E * (D - X3) - 8 * C) % P
    Z3 = 2 * Y * Z % P
    return (X3, Y3, Z3)


def _j1_madd(X1, Y1, Z1, x2, y2):
    if Z1 == 0:
        return (x2, y2, _1)
    Z1Z1 = Z1 * Z1 % P
    U2 = x2 * Z1Z1 % P
    S2 = y2 * Z1 * Z1Z1 % P
    H = (U2 - X1) % P
    rr = 2 * (S2 - Y1) % P
    if H == 0:
        if rr == 0:
            return _j1_double(X1, Y1, Z1)
        return (_1, _1, _0)
    HH = H * H % P
    I = 4 * HH
    J = H * I % P
    V = X1 * I % P
    X3 = (rr * rr - J - 2 * V) % P
    Y3 = (rr * (V - X3) - 2 * Y1 * J) % P
    Z3 = ((Z1 + H) ** 2 - Z1Z1 - HH) % P
    return (X3, Y3, Z3)


def _j1_add(X1, Y1, Z1, X2, Y2, Z2):
    if Z1 == 0:
        return (X2, Y2, Z2)
    if Z2 == 0:
        return (X1, Y1, Z1)
    Z1Z1 = Z1 * Z1 % P
    Z2Z2 = Z2 * Z2 % P
    U1 = X1 * Z2Z2 % P
    U2 = X2 * Z1Z1 % P
    S1 = Y1 * Z2 * Z2Z2 % P
    S2 = Y2 * Z1 * Z1Z1 % P
    H = (U2 - U1) % P
    rr = 2 * (S2 - S1) % P
    if H == 0:
        if rr == 0:
            return _j1_double(X1, Y1, Z1)
        return (_1, _1, _0)
    I = 4 * H * H % P
    J = H * I % P
    V = U1 * I % P
    X3 = (rr * rr - J - 2 * V) % P
    Y3 = (rr * (V - X3) - 2 * S1 * J) % P
    Z3 = ((Z1 + Z2) ** 2 - Z1Z1 - Z2Z2) * H % P
    return (X3, Y3, Z3)


def _j1_to_affine(X, Y, Z) -> G1Affine:
    if Z == 0:
        return None
    zi = invert(Z, P)
    zi2 = zi * zi % P
    return (X * zi2 % P, Y * zi2 * zi % P)


def _j1_batch_affine(points) -> List[G1Affine]:
    """Montgomery batch inversion over many Jacobian points."""
    zs = [pt[2] for pt in points]
    prefix = []
    acc = _1
    for z in zs:
        prefix.append(acc)
        if z:
            acc = acc * z % P
    inv_acc = invert(acc, P) if acc else _0
    out: List[G1Affine] = [None] * len(points)
    for i in range(len(points) - 1, -1, -1):
        X, Y, Z = points[i]
        if not Z:
            continue
        zi = inv_acc * prefix[i] % P
        inv_acc = inv_acc * Z % P
        zi2 = zi * zi % P
        out[i] = (X * zi2 % P, Y * zi2 * zi % P)
    return out


def g1_add(a: G1Affine, b: G1Affine) -> G1Affine:
    if a is None:
        return b
    if b is None:
        return a
    return _j1_to_affine(*_j1_madd(a[0], a[1], _1, b[0], b[1]))


def g1_mul(pt: G1Affine, k: int) -> G1Affine:
    k %= R
    if pt is None or k == 0:
        return None
    x, y = pt
    acc = (_1, _1, _0)
    for bit in bin(k)[2:]:
        acc = _j1_double(*acc)
        if bit == "1":
            acc = _j1_madd(*acc, x, y)
    return _j1_to_affine(*acc)


# -- G2 ----------------------------------------------------------------------

B2 = f2_mul(f2(3), f2_inv(XI))
G2_GEN: G2Affine = (
    f2(
        10857046999023057135944570762232829481370756359578518086990519993285655852781,
        11559732032986387107991004021392285783925812861821192530917403151452391805634,
    ),
    f2(
        8495653923123431417604973247489272438418190587263600148770280649306958101930,
        4082367875863433681332203403145435568316851327593401208105741076214120093531,
    ),
)
_J2_INF = (F2_ONE, F2_ONE, F2_ZERO)


def g2_on_curve(pt: G2Affine) -> bool:
    if pt is None:
        return True
    x, y = pt
    return f2_sub(f2_sqr(y), f2_add(f2_mul(f2_sqr(x), x), B2)) == F2_ZERO


def g2_neg(pt: G2Affine) -> G2Affine:
    return None if pt is None else (pt[0], f2_neg(pt[1]))


def _j2_double(X, Y, Z):
    x0, x1 = X
    y0, y1 = Y
    z0, z1 = Z
    if not (z0 or z1) or not (y0 or y1):
        return _J2_INF
    # A = X^2, B = Y^2, C = B^2
    a0 = (x0 + x1) * (x0 - x1) % P
    a1 = 2 * x0 * x1 % P
    b0 = (y0 + y1) * (y0 - y1) % P
    b1 = 2 * y0 * y1 % P
    c0 = (b0 + b1) * (b0 - b1) % P
    c1 = 2 * b0 * b1 % P
    # D = 2((X + B)^2 - A - C)
    t0 = x0 + b0
    t1 = x1 + b1
    d0 = 2 * ((t0 + t1) * (t0 - t1) - a0 - c0) % P
    d1 = 2 * (2 * t0 * t1 - a1 - c1) % P
    e0 = 3 * a0
    e1 = 3 * a1
    f0 = (e0 + e1) * (e0 - e1) % P
    f1 = 2 * e0 * e1 % P
    X3 = ((f0 - 2 * d0) % P, (f1 - 2 * d1) % P)
    u0 = d0 - X3[0]
    u1 = d1 - X3[1]
    m0 = e0 * u0
    m1 = e1 * u1
    Y3 = ((m0 - m1 - 8 * c0) % P, ((e0 + e1) * (u0 + u1) - m0 - m1 - 8 * c1) % P)
    n0 = y0 * z0
    n1 = y1 * z1
    Z3 = (2 * (n0 - n1) % P, 2 * ((y0 + y1) * (z0 + z1) - n0 - n1) % P)
    return (X3, Y3, Z3)


def _j2_madd(X1, Y1, Z1, x2, y2):
    z0, z1 = Z1
    if not (z0 or z1):
        return (x2, y2, F2_ONE)
    X0, X1_ = X1
    Y0, Y1_ = Y1
    # Z1Z1 = Z1^2
    zz0 = (z0 + z1) * (z0 - z1) % P
    zz1 = 2 * z0 * z1 % P
    # U2 = x2 * Z1Z1
    p0 = x2[0] * zz0
    p1 = x2[1] * zz1
    u0 = (p0 - p1) % P
    u1 = ((x2[0] + x2[1]) * (zz0 + zz1) - p0 - p1) % P
    # Z1^3
    p0 = z0 * zz0
    p1 = z1 * zz1
    w0 = (p0 - p1) % P
    w1 = ((z0 + z1) * (zz0 + zz1) - p0 - p1) % P
    # S2 = y2 * Z1^3
    p0 = y2[0] * w0
    p1 = y2[1] * w1
    s0 = (p0 - p1) % P
    s1 = ((y2[0] + y2[1]) * (w0 + w1) - p0 - p1) % P
    h0 = (u0 - X0) % P
    h1 = (u1 - X1_) % P
    r0 = 2 * (s0 - Y0) % P
    r1 = 2 * (s1 - Y1_) % P
    if not (h0 or h1):
        if not (r0 or r1):
            return _j2_double(X1, Y1, Z1)
        return _J2_INF
    hh0 = (h0 + h1) * (h0 - h1) % P
    hh1 = 2 * h0 * h1 % P
    i0 = 4 * hh0
    i1 = 4 * hh1
    # J = H * I
    p0 = h0 * i0
    p1 = h1 * i1
    j0 = (p0 - p1) % P
    j1 = ((h0 + h1) * (i0 + i1) - p0 - p1) % P
    # V = X1 * I
    p0 = X0 * i0
    p1 = X1_ * i1
    v0 = (p0 - p1) % P
    v1 = ((X0 + X1_) * (i0 + i1) - p0 - p1) % P
    x30 = ((r0 + r1) * (r0 - r1) - j0 - 2 * v0) % P
    x31 = (2 * r0 * r1 - j1 - 2 * v1) % P
    # Y3 = r (V - X3) - 2 Y1 J
    a0 = v0 - x30
    a1 = v1 - x31
    p0 = r0 * a0
    p1 = r1 * a1
    q0 = Y0 * j0
    q1 = Y1_ * j1
    y30 = (p0 - p1 - 2 * (q0 - q1)) % P
    y31 = ((r0 + r1) * (a0 + a1) - p0 - p1 - 2 * ((Y0 + Y1_) * (j0 + j1) - q0 - q1)) % P
    # Z3 = (Z1 + H)^2 - Z1Z1 - HH
    t0 = z0 + h0
    t1 = z1 + h1
    z30 = ((t0 + t1) * (t0 - t1) - zz0 - hh0) % P
    z31 = (2 * t0 * t1 - zz1 - hh1) % P
    return ((x30, x31), (y30, y31), (z30, z31))


def _j2_add(X1, Y1, Z1, X2, Y2, Z2):
    if Z1 == F2_ZERO:
        return (X2, Y2, Z2)
    if Z2 == F2_ZERO:
        return (X1, Y1, Z1)
    if Z2 == F2_ONE:
        return _j2_madd(X1, Y1, Z1, X2, Y2)
    Z1Z1 = f2_sqr(Z1)
    Z2Z2 = f2_sqr(Z2)
    U1 = f2_mul(X1, Z2Z2)
    U2 = f2_mul(X2, Z1Z1)
    S1 = f2_mul(Y1, f2_mul(Z2, Z2Z2))
    S2 = f2_mul(Y2, f2_mul(Z1, Z1Z1))
    H = f2_sub(U2, U1)
    rr = f2_sub(S2, S1)
    rr = f2_add(rr, rr)
    if H == F2_ZERO:
        if rr == F2_ZERO:
            return _j2_double(X1, Y1, Z1)
        return _J2_INF
    H2 = f2_add(H, H)
    I = f2_sqr(H2)
    J = f2_mul(H, I)
    V = f2_mul(U1, I)
    X3 = f2_sub(f2_sub(f2_sqr(rr), J), f2_add(V, V))
    SJ = f2_mul(S1, J)
    Y3 = f2_sub(f2_mul(rr, f2_sub(V, X3)), f2_add(SJ, SJ))
    Z3 = f2_mul(f2_sub(f2_sub(f2_sqr(f2_add(Z1, Z2)), Z1Z1), Z2Z2), H)
    return (X3, Y3, Z3)


def _j2_to_affine(X, Y, Z) -> G2Affine:
    if Z == F2_ZERO:
        return None
    zi = f2_inv(Z)
    zi2 = f2_sqr(zi)
    return (f2_mul(X, zi2), f2_mul(Y, f2_mul(zi2, zi)))


def _j2_batch_affine(points) -> List[G2Affine]:
    prefix = []
    acc = F2_ONE
    for pt in points:
        prefix.append(acc)
        if pt[2] != F2_ZERO:
            acc = f2_mul(acc, pt[2])
    inv_acc = f2_inv(acc)
    out: List[G2Affine] = [None] * len(points)
    for i in range(len(points) - 1, -1, -1):
        X, Y, Z = points[i]
        if Z == F2_ZERO:
            continue
        zi = f2_mul(inv_acc, prefix[i])
        inv_acc = f2_mul(inv_acc, Z)
        zi2 = f2_sqr(zi)
        out[i] = (f2_mul(X, zi2), f2_mul(Y, f2_mul(zi2, zi)))
    return out


def g2_add(a: G2Affine, b: G2Affine) -> G2Affine:
    if a is None:
        return b
    if b is None:
        return a
    return _j2_to_affine(*_j2_madd(a[0], a[1], F2_ONE, b[0], b[1]))


def _g2_mul_raw(pt: G2Affine, k: int) -> G2Affine:
    if pt is None or k == 0:
        return None
    x, y = pt
    acc = _J2_INF
    for bit in bin(k)[2:]:
        acc = _j2_double(*acc)
        if bit == "1":
            acc = _j2_madd(*acc, x, y)
    return _j2_to_affine(*acc)


def g2_mul(pt: G2Affine, k: int) -> G2Affine:
    return _g2_mul_raw(pt, k % R)


def g2_in_subgroup(pt: G2Affine) -> bool:
    return g2_on_curve(pt) and _g2_mul_raw(pt, R) is None


# -- fixed-base scalar multiplication ------------------------------------------


class FixedBase:
    """Precomputed window tables for repeated multiplication of one base point."""

    def __init__(self, point, group: int = 1, window: int = 8):
        self.group = group
        self.window = window
        self.windows = (254 + window - 1) // window
        if group == 1:
            dbl, madd, to_aff, batch = _j1_double, _j1_madd, _j1_to_affine, _j1_batch_affine
            inf = (_1, _1, _0)
            one = _1
        else:
            dbl, madd, to_aff, batch = _j2_double, _j2_madd, _j2_to_affine, _j2_batch_affine
            inf = _J2_INF
            one = F2_ONE
        self._madd = madd
        self._inf = inf
        self._to_aff = to_aff
        tables = []
        base = (point[0], point[1], one)
        for _ in range(self.windows):
            row = [inf]
            acc = inf
            bx, by = to_aff(*base)
            for _ in range((1 << window) - 1):
                acc = madd(*acc, bx, by)
                row.append(acc)
            tables.append(batch(row))
            for _ in range(window):
                base = dbl(*base)
        self.tables = tables

    def mul_jacobian(self, k: int):
        k %= R
        acc = self._inf
        mask = (1 << self.window) - 1
        madd = self._madd
        for table in self.tables:
            d = k & mask
            k >>= self.window
            if d:
                x, y = table[d]
                acc = madd(*acc, x, y)
        return acc

    def mul(self, k: int):
        return self._to_aff(*self.mul_jacobian(k))

    def mul_many(self, scalars: Sequence[int]) -> list:
        pts = [self.mul_jacobian(k) for k in scalars]
        return (_j1_batch_affine if self.group == 1 else _j2_batch_affine)(pts)


def g1_sum(points: Sequence[G1Affine]) -> G1Affine:
    acc = (_1, _1, _0)
    for pt in points:
        if pt is not None:
            acc = _j1_madd(*acc, pt[0], pt[1])
    return _j1_to_affine(*acc)


# -- pairing -----------------------------------------------------------------

_FROB_X = _FROB[2]  # xi^((p-1)/3)
_FROB_Y = _FROB[3]  # xi^((p-1)/2)


def _g2_frob(pt):
    x, y = pt
    return (f2_mul(f2_conj(x), _FROB_X), f2_mul(f2_conj(y), _FROB_Y))


def prepare_g2(Q: G2Affine) -> list:
    """Line coefficients (slope, slope*x_T - y_T) for the Miller loop of ``Q``."""
    if Q is None:
        return []
    coeffs = []
    T = Q
    qx, qy = Q

    def step_dbl(T):
        x, y = T
        lam = f2_mul(f2_scale(f2_sqr(x), 3), f2_inv(f2_add(y, y)))
        coeffs.append((lam, f2_sub(f2_mul(lam, x), y)))
        x3 = f2_sub(f2_sqr(lam), f2_add(x, x))
        y3 = f2_sub(f2_mul(lam, f2_sub(x, x3)), y)
        return (x3, y3)

    def step_add(T, S):
        x, y = T
        sx, sy = S
        lam = f2_mul(f2_sub(sy, y), f2_inv(f2_sub(sx, x)))
        coeffs.append((lam, f2_sub(f2_mul(lam, x), y)))
        x3 = f2_sub(f2_sub(f2_sqr(lam), x), sx)
        y3 = f2_sub(f2_mul(lam, f2_sub(x, x3)), y)
        return (x3, y3)

    for bit in ATE_BITS:
        T = step_dbl(T)
        if bit:
            T = step_add(T, Q)
    q1 = _g2_frob(Q)
    q2 = _g2_frob(q1)
    T = step_add(T, q1)
    step_add(T, (q2[0], f2_neg(q2[1])))
    return coeffs


def miller_loop(pairs: Sequence[tuple]) -> tuple:
    """Product of Miller loops over ``(P in G1, prepared Q)`` pairs."""
    live = [(p, c) for p, c in pairs if p is not None and c]
    f = F12_ONE
    if not live:
        return f
    evals = [(p[1], (-p[0]) % P, c) for p, c in live]
    idx = 0
    first = True
    for bit in ATE_BITS:
        if not first:
            f = f12_sqr(f)
        first = False
        for yp, nxp, c in evals:
            lam, k = c[idx]
            f = f12_mul_line(f, yp, f2_scale(lam, nxp), k)
        idx += 1
        if bit:
            for yp, nxp, c in evals:
                lam, k = c[idx]
                f = f12_mul_line(f, yp, f2_scale(lam, nxp), k)
            idx += 1
    for _ in range(2):
        for yp, nxp, c in evals:
            lam, k = c[idx]
            f = f12_mul_line(f, yp, f2_scale(lam, nxp), k)
        idx += 1
    return f


def _cyc_pow_u(f):
    out = F12_ONE
    for bit in bin(U)[2:]:
        out = f12_sqr(out)
        if bit == "1":
            out = f12_mul(out, f)
    return out


def final_exponentiation(f):
    # easy part: f^((p^6 - 1)(p^2 + 1))
    f = f12_mul(f12_conj(f), f12_inv(f))
    f = f12_mul(f12_frob(f12_frob(f)), f)
    # hard part (p^4 - p^2 + 1)/r via the u-adic decomposition
    fu = _cyc_pow_u(f)
    fu2 = _cyc_pow_u(fu)
    fu3 = _cyc_pow_u(fu2)
    fp = f12_frob(f)
    fp2 = f12_frob(fp)
    fp3 = f12_frob(fp2)
    y0 = f12_mul(f12_mul(fp, fp2), fp3)
    y1 = f12_conj(f)
    y2 = f12_frob(f12_frob(fu2))
    y3 = f12_conj(f12_frob(fu))
    y4 = f12_conj(f12_mul(fu, f12_frob(fu2)))
    y5 = f12_conj(fu2)
    y6 = f12_conj(f12_mul(fu3, f12_frob(fu3)))
    t0 = f12_mul(f12_mul(f12_sqr(y6), y4), y5)
    t1 = f12_mul(f12_mul(y3, y5), t0)
    t0 = f12_mul(t0, y2)
    t1 = f12_sqr(f12_mul(f12_sqr(t1), t0))
    t0 = f12_mul(t1, y1)
    t1 = f12_mul(t1, y0)
    t0 = f12_sqr(t0)
    return f12_mul(t1, t0)


HARD_EXPONENT = (int(P) ** 4 - int(P) ** 2 + 1) // R


def final_exponentiation_naive(f):
    f = f12_mul(f12_conj(f), f12_inv(f))
    f = f12_mul(f12_frob(f12_frob(f)), f)
    return f12_pow(f, HARD_EXPONENT)


def pairing(p: G1Affine, q: G2Affine):
    return final_exponentiation(miller_loop([(p, prepare_g2(q))]))


def pairing_product_is_one(pairs: Sequence[tuple]) -> bool:
    """Check prod e(P_i, Q_i) == 1 where Q_i are already prepared."""
    return final_exponentiation(miller_loop(pairs)) == F12_ONE


# -- compressed encoding -------------------------------------------------------
# Big-endian x with two flag bits in the first byte: 0x80 = point at infinity,
# 0x40 = y is the larger of the two roots. G2 writes the imaginary part first.

_FLAG_INF = 0x80
_FLAG_LARGE = 0x40
_HALF = (P - 1) // 2


def _f2_is_large(y) -> bool:
    return y[1] > _HALF if y[1] else y[0] > _HALF


def g1_compress(pt: G1Affine) -> bytes:
    if pt is None:
        return bytes([_FLAG_INF]) + bytes(31)
    x, y = pt
    out = bytearray(int(x).to_bytes(32, "big"))
    if y > _HALF:
        out[0] |= _FLAG_LARGE
    return bytes(out)


def g1_decompress(data: bytes) -> G1Affine:
    if len(data) != 32:
        raise ValueError("G1 encoding must be 32 bytes")
    flags = data[0] & 0xC0
    x = int.from_bytes(bytes([data[0] & 0x3F]) + data[1:], "big")
    if flags & _FLAG_INF:
        if flags != _FLAG_INF or x:
            raise ValueError("non-canonical infinity")
        return None
    if x >= P:
        raise ValueError("x not reduced")
    x = mpz(x)
    rhs = (x * x * x + B1) % P
    y = pow(rhs, (P + 1) // 4, P)
    if y * y % P != rhs:
        raise ValueError("x is not on the curve")
    if (y > _HALF) != bool(flags & _FLAG_LARGE):
        y = (P - y) % P
    return (x, y)


def g2_compress(pt: G2Affine) -> bytes:
    if pt is None:
        return bytes([_FLAG_INF]) + bytes(63)
    x, y = pt
    out = bytearray(int(x[1]).to_bytes(32, "big") + int(x[0]).to_bytes(32, "big"))
    if _f2_is_large(y):
        out[0] |= _FLAG_LARGE
    return bytes(out)


def g2_decompress(data: bytes, check_subgroup: bool = True) -> G2Affine:
    if len(data) != 64:
        raise ValueError("G2 encoding must be 64 bytes")
    flags = data[0] & 0xC0
    x1 = int.from_bytes(bytes([data[0] & 0x3F]) + data[1:32], "big")
    x0 = int.from_bytes(data[32:], "big")
    if flags & _FLAG_INF:
        if flags != _FLAG_INF or x0 or x1:
            raise ValueError("non-canonical infinity")
        return None
    if x0 >= P or x1 >= P:
        raise ValueError("x not reduced")
    x = f2(x0, x1)
    y = f2_sqrt(f2_add(f2_mul(f2_sqr(x), x), B2))
    if y is None:
        raise ValueError("x is not on the twist")
    if _f2_is_large(y) != bool(flags & _FLAG_LARGE):
        y = f2_neg(y)
    pt = (x, y)
    if check_subgroup and not g2_in_subgroup(pt):
        raise ValueError("point outside the order-r subgroup")
    return pt
