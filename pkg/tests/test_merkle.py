from hypothesis import given, strategies as st

from b5groam.merkle import EMPTY_ROOT, merkle_proof, merkle_root, state_root, verify_path

leaves = st.lists(st.binary(min_size=1, max_size=40), min_size=1, max_size=33)


def test_empty_and_single():
    assert merkle_root([]) == EMPTY_ROOT
    assert merkle_root([b"a"]) != merkle_root([b"b"])


@given(leaves, st.data())
def test_paths_verify(ls, data):
    root = merkle_root(ls)
    i = data.draw(st.integers(0, len(ls) - 1))
    path = merkle_proof(ls, i)
    assert verify_path(ls[i], path, root)
    assert not verify_path(ls[i] + b"x", path, root)


@given(leaves)
def test_root_depends_on_order_and_content(ls):
    if len(set(ls)) > 1:
        assert merkle_root(ls[::-1]) != merkle_root(ls) or ls == ls[::-1]
    assert merkle_root(ls + [b"extra"]) != merkle_root(ls)


def test_leaf_and_node_domains_are_separated():
    # a two-leaf tree must not collide with the single leaf equal to the concatenated children
    import hashlib

    a, b = b"left", b"right"
    ha = hashlib.sha256(b"\x00" + a).digest()
    hb = hashlib.sha256(b"\x00" + b).digest()
    assert merkle_root([a, b]) != merkle_root([b"\x01" + ha + hb])


def test_state_root_is_order_independent():
    acc = {"0x" + "11" * 20: 5, "0x" + "22" * 20: 7}
    sess = {"x/1": {"phase": "Settled"}, "x/2": {"phase": "Committed"}}
    assert state_root(acc, sess) == state_root(dict(reversed(list(acc.items()))), dict(reversed(list(sess.items()))))
    assert state_root(acc, sess) != state_root({**acc, "0x" + "11" * 20: 6}, sess)
