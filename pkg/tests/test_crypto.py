import hashlib
import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmledger import crypto
from swarmledger.crypto import DecryptionError, MultisigError, MultisigSpec

from helpers import keys


def test_hash_matches_sha256_vectors():
    assert crypto.hash(b"").hex() == (
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855")
    assert crypto.hash(b"abc").hex() == (
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad")


def test_hash_is_deterministic_and_sized():
    assert crypto.hash(b"x") == crypto.hash(b"x")
    assert len(crypto.hash(b"x")) == crypto.DIGEST_SIZE


def test_appending_a_zero_byte_changes_the_digest():
    rnd = os.urandom
    for _ in range(10_000):
        x = rnd(16)
        assert crypto.hash(x) != crypto.hash(x + b"\x00")


def test_keygen_is_deterministic():
    seed = bytes(range(32))
    a, b = crypto.generate_keypair(seed), crypto.generate_keypair(seed)
    assert a == b
    assert len(a.public) == crypto.PUBKEY_SIZE
    assert len(a.private) == crypto.PRIVKEY_SIZE


def test_distinct_seeds_distinct_keys_and_addresses():
    pairs = [crypto.generate_keypair(i.to_bytes(32, "big")) for i in range(1000)]
    assert len({p.public for p in pairs}) == 1000
    addrs = {crypto.derive_address(p.public) for p in pairs}
    assert len(addrs) == 1000
    assert all(len(a) == crypto.ADDRESS_SIZE for a in addrs)


def test_every_generated_pair_signs_hello():
    for i in range(50):
        k = keys(i)
        assert crypto.verify(k.public, b"hello", crypto.sign(k.private, b"hello"))


def test_signature_bound_to_message_and_key():
    a, b = keys(1), keys(2)
    sig = crypto.sign(a.private, b"msg")
    assert crypto.verify(a.public, b"msg", sig)
    assert not crypto.verify(a.public, b"msg\x01", sig)
    assert not crypto.verify(b.public, b"msg", sig)


def test_bad_seed_length_rejected():
    with pytest.raises(ValueError):
        crypto.generate_keypair(b"short")


def test_private_key_hidden_from_repr():
    k = keys(1)
    assert k.private.hex() not in repr(k)


@settings(max_examples=50, deadline=None)
@given(st.binary(max_size=256), st.integers(0, 255), st.integers(0, 255))
def test_sign_verify_property(msg, i, j):
    a = keys(i)
    sig = crypto.sign(a.private, msg)
    assert crypto.verify(a.public, msg, sig)
    if i != j:
        assert not crypto.verify(keys(j).public, msg, sig)


def test_address_is_truncated_hash():
    k = keys(4)
    assert crypto.derive_address(k.public) == hashlib.sha256(k.public).digest()[:20]
    assert k.address == crypto.derive_address(k.public)


def test_multisig_address_ignores_key_order():
    a, b, c = keys(1).public, keys(2).public, keys(3).public
    assert MultisigSpec(2, [a, b, c]).address == MultisigSpec(2, [c, a, b]).address
    assert MultisigSpec(2, [a, b, c]).address != MultisigSpec(3, [a, b, c]).address
    assert crypto.derive_multisig_address(MultisigSpec(2, [b, a])) == MultisigSpec(2, [a, b]).address


@pytest.mark.parametrize("m, n", [(0, 3), (4, 3)])
def test_multisig_threshold_bounds(m, n):
    pubs = [keys(i).public for i in range(n)]
    with pytest.raises(MultisigError):
        MultisigSpec(m, pubs)


def test_multisig_duplicate_keys_rejected():
    a = keys(1).public
    with pytest.raises(MultisigError):
        MultisigSpec(1, [a, a])


def test_multisig_spec_roundtrip():
    spec = MultisigSpec(2, [keys(i).public for i in (5, 1, 3)])
    assert MultisigSpec.decode(spec.encode()) == spec
    assert list(spec.pubkeys) == sorted(spec.pubkeys)


def test_encrypt_roundtrip_and_overhead():
    k = keys(1)
    pt = os.urandom(64)
    ct = crypto.encrypt_for(k.public, pt)
    assert crypto.decrypt(k.private, ct) == pt
    assert len(ct) <= len(pt) + crypto.SEAL_OVERHEAD


def test_decrypt_with_wrong_key_fails_loudly():
    ct = crypto.encrypt_for(keys(1).public, b"secret")
    with pytest.raises(DecryptionError):
        crypto.decrypt(keys(2).private, ct)


def test_tampered_ciphertext_rejected():
    k = keys(1)
    ct = bytearray(crypto.encrypt_for(k.public, b"secret"))
    ct[-1] ^= 1
    with pytest.raises(DecryptionError):
        crypto.decrypt(k.private, bytes(ct))


def test_seeded_encryption_is_deterministic():
    k = keys(1)
    e = b"\x07" * 32
    assert crypto.encrypt_for(k.public, b"x", e) == crypto.encrypt_for(k.public, b"x", e)
    assert crypto.encrypt_for(k.public, b"x", e) != crypto.encrypt_for(k.public, b"y", e)


@settings(max_examples=30, deadline=None)
@given(st.binary(max_size=300), st.integers(0, 50), st.integers(0, 50))
def test_confidentiality_property(pt, i, j):
    ct = crypto.encrypt_for(keys(i).public, pt)
    assert crypto.decrypt(keys(i).private, ct) == pt
    if i != j:
        with pytest.raises(DecryptionError):
            crypto.decrypt(keys(j).private, ct)
