"""Keys, signatures, digests, addresses and sealed-box encryption.

SHA-256 for digests, Ed25519 for signatures, and X25519 + HKDF +
ChaCha20-Poly1305 for encryption to a public key. Both key halves are
derived from one 32-byte seed, so a robot's identity is reproducible from
the simulation RNG.
"""
import functools
import hashlib
import os
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from .encoding import DecodeError, Reader, Writer

DIGEST_SIZE = 32
ADDRESS_SIZE = 20
PUBKEY_SIZE = 64  # Ed25519 verify key || X25519 encryption key
PRIVKEY_SIZE = 32
SIGNATURE_SIZE = 64
SEAL_OVERHEAD = 32 + 16  # ephemeral X25519 key + Poly1305 tag

ZERO_DIGEST = bytes(DIGEST_SIZE)
ZERO_ADDRESS = bytes(ADDRESS_SIZE)

_RAW = (Encoding.Raw, PublicFormat.Raw)
_SEAL_NONCE = bytes(12)


class CryptoError(ValueError):
    pass


class DecryptionError(CryptoError):
    """Ciphertext was not sealed for this key, or was modified."""


class MultisigError(CryptoError):
    pass


def hash(data: bytes) -> bytes:  # noqa: A001 - mirrors the ledger vocabulary
    return hashlib.sha256(data).digest()


@dataclass(frozen=True)
class KeyPair:
    public: bytes
    private: bytes

    def __repr__(self):
        # private bytes must not leak into logs or event dumps
        return f"KeyPair(public={self.public.hex()[:16]}...)"

    @property
    def address(self) -> bytes:
        return derive_address(self.public)


@dataclass(frozen=True)
class Signature:
    bytes: bytes
    signer: bytes

    def encode(self, w: Writer):
        w.fixed(self.bytes, SIGNATURE_SIZE).fixed(self.signer, PUBKEY_SIZE)

    @classmethod
    def decode(cls, r: Reader) -> "Signature":
        return cls(r.fixed(SIGNATURE_SIZE), r.fixed(PUBKEY_SIZE))


def _subkeys(private: bytes) -> tuple[Ed25519PrivateKey, X25519PrivateKey]:
    if len(private) != PRIVKEY_SIZE:
        raise CryptoError("private key must be 32 bytes")
    return _subkeys_cached(private)


@functools.lru_cache(maxsize=4096)
def _subkeys_cached(private: bytes):
    sk = Ed25519PrivateKey.from_private_bytes(hash(b"swarmledger/ed25519" + private))
    xk = X25519PrivateKey.from_private_bytes(hash(b"swarmledger/x25519" + private))
    return sk, xk


def generate_keypair(seed: bytes) -> KeyPair:
    """Deterministic keypair; the seed itself is kept as the private key."""
    if len(seed) != PRIVKEY_SIZE:
        raise CryptoError("seed must be 32 bytes")
    sk, xk = _subkeys(seed)
    public = sk.public_key().public_bytes(*_RAW) + xk.public_key().public_bytes(*_RAW)
    return KeyPair(public=public, private=bytes(seed))


def public_of(private: bytes) -> bytes:
    return generate_keypair(private).public


def sign(private: bytes, msg: bytes) -> Signature:
    sk, xk = _subkeys(private)
    public = sk.public_key().public_bytes(*_RAW) + xk.public_key().public_bytes(*_RAW)
    return Signature(sk.sign(msg), public)


@functools.lru_cache(maxsize=1 << 16)
def _verify_cached(pub: bytes, msg: bytes, sig: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(pub[:32]).verify(sig, msg)
    except (InvalidSignature, ValueError):
        return False
    return True


def verify(pub: bytes, msg: bytes, sig: Signature) -> bool:
    if len(pub) != PUBKEY_SIZE or sig.signer != pub or len(sig.bytes) != SIGNATURE_SIZE:
        return False
    # pure function of its inputs; gossip makes every node re-check the same txs
    return _verify_cached(bytes(pub), bytes(msg), bytes(sig.bytes))


def derive_address(pub: bytes) -> bytes:
    return hash(pub)[:ADDRESS_SIZE]


@dataclass(frozen=True)
class MultisigSpec:
    """m-of-n spending rule; keys are stored in canonical (sorted) order."""

    m: int
    pubkeys: tuple

    def __post_init__(self):
        keys = tuple(bytes(k) for k in self.pubkeys)
        if any(len(k) != PUBKEY_SIZE for k in keys):
            raise MultisigError("malformed public key")
        if len(set(keys)) != len(keys):
            raise MultisigError("duplicate public keys")
        if not 1 <= self.m <= len(keys):
            raise MultisigError(f"need 1 <= m <= n, got m={self.m} n={len(keys)}")
        object.__setattr__(self, "pubkeys", tuple(sorted(keys)))

    @property
    def n(self) -> int:
        return len(self.pubkeys)

    def encode(self) -> bytes:
        w = Writer().u32(self.m).count(self.n)
        for k in self.pubkeys:
            w.fixed(k, PUBKEY_SIZE)
        return w.getvalue()

    @classmethod
    def read(cls, r: Reader) -> "MultisigSpec":
        m = r.u32()
        n = r.count()
        if n > 64:
            raise DecodeError("multisig key list too long")
        keys = tuple(r.fixed(PUBKEY_SIZE) for _ in range(n))
        try:
            return cls(m, keys)
        except MultisigError as exc:
            raise DecodeError(str(exc)) from None

    @classmethod
    def decode(cls, data: bytes) -> "MultisigSpec":
        r = Reader(data)
        spec = cls.read(r)
        r.done()
        return spec

    @property
    def address(self) -> bytes:
        return derive_multisig_address(self)


def derive_multisig_address(spec: MultisigSpec) -> bytes:
    return hash(spec.encode())[:ADDRESS_SIZE]


def encrypt_for(pub: bytes, plaintext: bytes, entropy: bytes | None = None) -> bytes:
    """Seal ``plaintext`` so only the holder of ``pub``'s private key can open it.

    ``entropy`` fixes the ephemeral key; simulations pass RNG output here so
    runs stay byte-reproducible. Omit it to draw from the OS.
    """
    if len(pub) != PUBKEY_SIZE:
        raise CryptoError("malformed public key")
    if entropy is None:
        entropy = os.urandom(32)
    # plaintext folded in so a repeated entropy value never repeats a key/nonce pair
    eph = X25519PrivateKey.from_private_bytes(
        hash(b"swarmledger/ephemeral" + hash(entropy) + plaintext)
    )
    eph_pub = eph.public_key().public_bytes(*_RAW)
    shared = eph.exchange(X25519PublicKey.from_public_bytes(pub[32:]))
    key = _seal_key(shared, eph_pub, pub)
    return eph_pub + ChaCha20Poly1305(key).encrypt(_SEAL_NONCE, plaintext, None)


def decrypt(private: bytes, ciphertext: bytes) -> bytes:
    if len(ciphertext) < SEAL_OVERHEAD:
        raise DecryptionError("ciphertext too short")
    sk, xk = _subkeys(private)
    pub = sk.public_key().public_bytes(*_RAW) + xk.public_key().public_bytes(*_RAW)
    eph_pub = ciphertext[:32]
    try:
        shared = xk.exchange(X25519PublicKey.from_public_bytes(eph_pub))
        key = _seal_key(shared, eph_pub, pub)
        return ChaCha20Poly1305(key).decrypt(_SEAL_NONCE, ciphertext[32:], None)
    except (InvalidTag, ValueError):
        raise DecryptionError("ciphertext not sealed for this key") from None


def _seal_key(shared: bytes, eph_pub: bytes, recipient: bytes) -> bytes:
    return HKDF(
        algorithm=hashes.SHA256(),
        length=32,
        salt=None,
        info=b"swarmledger/seal" + eph_pub + recipient,
    ).derive(shared)
