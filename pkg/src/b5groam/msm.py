"""Multi-scalar multiplication with batch-affine bucket reduction.

Points falling into the same bucket are summed pairwise in layers; each layer
shares one field inversion across every pending addition (Montgomery's
trick), so an addition costs a handful of multiplications instead of a full
Jacobian formula. :class:`MSMTable` additionally precomputes ``2^(c*w) * B``
for fixed bases, which removes the per-window doublings and bucket sweeps.
"""

from __future__ import annotations

from itertools import accumulate
from typing import List, Sequence

from gmpy2 import invert

from .bn254 import (
    F2_ZERO,
    P,
    R,
    _j1_add,
    g1_add,
    g2_add,
    _j1_batch_affine,
    _j1_double,
    _j1_madd,
    _j1_to_affine,
    _j2_add,
    _j2_batch_affine,
    _j2_double,
    _j2_madd,
    _j2_to_affine,
    _J2_INF,
    _0,
    _1,
)

_J1_INF = (_1, _1, _0)


def _signed_bytes(k: int, n_windows: int) -> list[int]:
    """Signed radix-256 digits in [-128, 128) (the c = 8 case, via to_bytes)."""
    out = []
    carry = 0
    for d in k.to_bytes(n_windows, "little"):
        d += carry
        if d >= 128:
            out.append(d - 256)
            carry = 1
        else:
            out.append(d)
            carry = 0
    return out


def _signed_digits(k: int, c: int, n_windows: int) -> list[int]:
    if c == 8:
        return _signed_bytes(k, n_windows)
    full = 1 << c
    half = full >> 1
    mask = full - 1
    out = []
    carry = 0
    for _ in range(n_windows):
        d = (k & mask) + carry
        k >>= c
        if d >= half:
            d -= full
            carry = 1
        else:
            carry = 0
        out.append(d)
    return out


# -- batch-affine bucket reduction -------------------------------------------


def _pair_up(active: List[list], slow_add, same_x):
    """Split every bucket into (left, right) pairs; odd leftovers stay in place.

    Pairs sharing an x coordinate (doubling or cancellation) are summed
    immediately with ``slow_add`` so the batched pass never divides by zero.
    """
    left, right, dst = [], [], []
    for pts in active:
        n = len(pts)
        left.extend(pts[0:n - 1:2])
        right.extend(pts[1:n:2])
        dst.extend([pts] * (n >> 1))
        pts[:] = pts[-1:] if n & 1 else ()
    clash = [k for k, (p, q) in enumerate(zip(left, right)) if same_x(p, q)]
    if clash:
        for k in clash:
            out = slow_add(left[k], right[k])
            if out is not None:
                dst[k].append(out)
        keep = sorted(set(range(len(left))) - set(clash))
        left = [left[k] for k in keep]
        right = [right[k] for k in keep]
        dst = [dst[k] for k in keep]
    return left, right, dst


def _mulmod(a, b):
    return a * b % P


def _reduce_g1(buckets: List[list]) -> None:
    """Collapse each bucket's point list to at most one affine point, in place."""
    active = [b for b in buckets if len(b) > 1]
    while active:
        left, right, dst = _pair_up(active, g1_add, lambda p, q: p[0] == q[0])
        if left:
            dens = [q[0] - p[0] for p, q in zip(left, right)]
            prefix = list(accumulate(dens, _mulmod, initial=_1))
            inv = invert(prefix[-1], P)
            for k in range(len(dens) - 1, -1, -1):
                dinv = inv * prefix[k] % P
                inv = inv * dens[k] % P
                x1, y1 = left[k]
                x2, y2 = right[k]
                lam = (y2 - y1) * dinv % P
                x3 = (lam * lam - x1 - x2) % P
                dst[k].append((x3, (lam * (x1 - x3) - y1) % P))
        active = [b for b in active if len(b) > 1]


def _reduce_g2(buckets: List[list]) -> None:
    active = [b for b in buckets if len(b) > 1]
    while active:
        left, right, dst = _pair_up(active, g2_add, lambda p, q: p[0] == q[0])
        if left:
            # 1 / (d0 + d1 i) = (d0 - d1 i) / (d0^2 + d1^2): batch-invert the norms in Fp
            ds = [(q[0][0] - p[0][0], q[0][1] - p[0][1]) for p, q in zip(left, right)]
            norms = [(d0 * d0 + d1 * d1) % P for d0, d1 in ds]
            prefix = list(accumulate(norms, _mulmod, initial=_1))
            inv = invert(prefix[-1], P)
            for k in range(len(ds) - 1, -1, -1):
                ninv = inv * prefix[k] % P
                inv = inv * norms[k] % P
                d0, d1 = ds[k]
                e0 = d0 * ninv % P
                e1 = -d1 * ninv % P
                (x10, x11), (y10, y11) = left[k]
                (x20, x21), (y20, y21) = right[k]
                n0 = y20 - y10
                n1 = y21 - y11
                t0 = n0 * e0
                t1 = n1 * e1
                l0 = (t0 - t1) % P
                l1 = ((n0 + n1) * (e0 + e1) - t0 - t1) % P
                x30 = ((l0 + l1) * (l0 - l1) - x10 - x20) % P
                x31 = (2 * l0 * l1 - x11 - x21) % P
                u0 = x10 - x30
                u1 = x11 - x31
                t0 = l0 * u0
                t1 = l1 * u1
                dst[k].append(((x30, x31), ((t0 - t1 - y10) % P, ((l0 + l1) * (u0 + u1) - t0 - t1 - y11) % P)))
        active = [b for b in active if len(b) > 1]


class _Group:
    def __init__(self, reduce, madd, add, dbl, to_affine, batch_affine, inf, neg_y, is_inf):
        self.one = inf[0]
        self.reduce = reduce
        self.madd = madd
        self.add = add
        self.dbl = dbl
        self.to_affine = to_affine
        self.batch_affine = batch_affine
        self.inf = inf
        self.neg_y = neg_y
        self.is_inf = is_inf


G1 = _Group(
    _reduce_g1, _j1_madd, _j1_add, _j1_double, _j1_to_affine, _j1_batch_affine, _J1_INF,
    lambda y: -y % P, lambda q: q[2] == 0,
)
G2 = _Group(
    _reduce_g2, _j2_madd, _j2_add, _j2_double, _j2_to_affine, _j2_batch_affine, _J2_INF,
    lambda y: (-y[0] % P, -y[1] % P), lambda q: q[2] == F2_ZERO,
)


def _aggregate(group: _Group, buckets: List[list]):
    """sum_j j * bucket_j for buckets already reduced to <= 1 affine point."""
    running = group.inf
    total = group.inf
    madd = group.madd
    add = group.add
    is_inf = group.is_inf
    for j in range(len(buckets) - 1, 0, -1):
        b = buckets[j]
        if b:
            running = madd(*running, b[0][0], b[0][1])
        if not is_inf(running):
            total = add(*total, *running)
    return total


def _window(n: int) -> int:
    for limit, c in ((8, 3), (32, 4), (128, 5), (512, 6), (2048, 7)):
        if n < limit:
            return c
    return 8


def msm(group: _Group, bases: Sequence, scalars: Sequence[int]):
    """Pippenger over arbitrary affine bases; returns an affine point or None."""
    pairs = [(b, k % R) for b, k in zip(bases, scalars) if b is not None and k % R]
    if not pairs:
        return None
    c = _window(len(pairs))
    n_windows = 254 // c + 2
    half = 1 << (c - 1)
    digits = [_signed_digits(k, c, n_windows) for _, k in pairs]
    neg_y = group.neg_y
    negs = [(b[0], neg_y(b[1])) for b, _ in pairs]
    result = group.inf
    top = max((w for ds in digits for w, d in enumerate(ds) if d), default=0)
    for w in range(top, -1, -1):
        if not group.is_inf(result):
            for _ in range(c):
                result = group.dbl(*result)
        buckets: List[list] = [[] for _ in range(half + 1)]
        for i, ds in enumerate(digits):
            d = ds[w]
            if d > 0:
                buckets[d].append(pairs[i][0])
            elif d < 0:
                buckets[-d].append(negs[i])
        group.reduce(buckets)
        result = group.add(*result, *_aggregate(group, buckets))
    return group.to_affine(*result)


def msm_g1(bases, scalars):
    return msm(G1, bases, scalars)


def msm_g2(bases, scalars):
    return msm(G2, bases, scalars)


class MSMTable:
    """Fixed-base MSM: every base carries its window multiples ``2^(c*w) * B``."""

    def __init__(self, group: _Group, bases: Sequence, c: int = 10):
        self.group = group
        self.c = c
        self.n_windows = 254 // c + 2
        rows = []
        for b in bases:
            if b is None:
                rows.append(None)
                continue
            jac = [None] * self.n_windows
            cur = (b[0], b[1], group.one)
            for w in range(self.n_windows):
                jac[w] = cur
                for _ in range(c):
                    cur = group.dbl(*cur)
            rows.append(jac)
        flat = [pt for row in rows if row is not None for pt in row]
        affine = group.batch_affine(flat)
        it = iter(affine)
        self.tables = [None if row is None else [next(it) for _ in row] for row in rows]
        neg_y = group.neg_y
        self.neg_tables = [
            None if t is None else [None if q is None else (q[0], neg_y(q[1])) for q in t]
            for t in self.tables
        ]

    def __len__(self):
        return len(self.tables)

    def msm(self, scalars: Sequence[int]):
        group = self.group
        c = self.c
        nw = self.n_windows
        half = 1 << (c - 1)
        buckets: List[list] = [[] for _ in range(half + 1)]
        for table, neg, k in zip(self.tables, self.neg_tables, scalars):
            if table is None:
                continue
            k %= R
            if k < half:
                if k:
                    buckets[k].append(table[0])
                continue
            for w, d in enumerate(_signed_digits(k, c, nw)):
                if d > 0:
                    buckets[d].append(table[w])
                elif d < 0:
                    buckets[-d].append(neg[w])
        group.reduce(buckets)
        return group.to_affine(*_aggregate(group, buckets))
