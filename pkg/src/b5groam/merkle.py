"""Binary SHA-256 Merkle tree over canonical state leaves.

Leaves and inner nodes are domain-separated (``0x00`` / ``0x01`` prefixes);
odd levels duplicate their last node. Both the L2 sequencer and the L1 mirror
compute roots through :func:`state_root`, so the two views are comparable
byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from typing import Mapping, Sequence

EMPTY_ROOT = hashlib.sha256(b"b5groam/empty").digest()


def _h(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def merkle_root(leaves: Sequence[bytes]) -> bytes:
    if not leaves:
        return EMPTY_ROOT
    level = [_h(b"\x00" + leaf) for leaf in leaves]
    while len(level) > 1:
        if len(level) & 1:
            level.append(level[-1])
        level = [_h(b"\x01" + level[i] + level[i + 1]) for i in range(0, len(level), 2)]
    return level[0]


def merkle_proof(leaves: Sequence[bytes], index: int) -> list[tuple[bytes, bool]]:
    """Sibling path for ``leaves[index]``; each step is (sibling, sibling_is_right)."""
    if not 0 <= index < len(leaves):
        raise IndexError(index)
    level = [_h(b"\x00" + leaf) for leaf in leaves]
    path = []
    while len(level) > 1:
        if len(level) & 1:
            level.append(level[-1])
        sib = index ^ 1
        path.append((level[sib], sib > index))
        level = [_h(b"\x01" + level[i] + level[i + 1]) for i in range(0, len(level), 2)]
        index //= 2
    return path


def verify_path(leaf: bytes, path: Sequence[tuple[bytes, bool]], root: bytes) -> bool:
    node = _h(b"\x00" + leaf)
    for sib, right in path:
        node = _h(b"\x01" + (node + sib if right else sib + node))
    return node == root


def canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def account_leaf(address: str, balance: int) -> bytes:
    return b"A" + bytes.fromhex(address[2:]) + int(balance).to_bytes(32, "big")


def session_leaf(key: str, session: Mapping) -> bytes:
    return b"S" + _h(key.encode()) + _h(canonical(dict(session)))


def state_leaves(accounts: Mapping[str, int], sessions: Mapping[str, Mapping]) -> list[bytes]:
    leaves = [account_leaf(a, accounts[a]) for a in sorted(accounts)]
    leaves += [session_leaf(k, sessions[k]) for k in sorted(sessions)]
    return leaves


def state_root(accounts: Mapping[str, int], sessions: Mapping[str, Mapping]) -> bytes:
    return merkle_root(state_leaves(accounts, sessions))
