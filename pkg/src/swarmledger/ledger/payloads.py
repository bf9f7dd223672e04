"""Payload layouts for the structured transaction kinds."""
from dataclasses import dataclass

from .. import crypto
from ..crypto import ADDRESS_SIZE, DIGEST_SIZE, MultisigSpec
from ..encoding import DecodeError, Reader, Writer

MAX_OPTIONS = 16
PEG_DEBIT = 0
PEG_CREDIT = 1


def option_address(proposer: bytes, nonce: int, index: int) -> bytes:
    """Fresh, keyless address standing for one ballot option."""
    w = Writer().raw(b"swarmledger/option").fixed(proposer, ADDRESS_SIZE).u64(nonce).u32(index)
    return crypto.hash(w.getvalue())[:ADDRESS_SIZE]


def encode_proposal(window: int, options) -> bytes:
    w = Writer().u32(window).count(len(options))
    for addr in options:
        w.fixed(addr, ADDRESS_SIZE)
    return w.getvalue()


def decode_proposal(payload: bytes) -> tuple[int, tuple]:
    r = Reader(payload)
    window = r.u32()
    n = r.count()
    if not 2 <= n <= MAX_OPTIONS:
        raise DecodeError("proposal needs 2..16 options")
    options = tuple(r.fixed(ADDRESS_SIZE) for _ in range(n))
    r.done()
    return window, options


def decode_vote(payload: bytes) -> bytes:
    if len(payload) != DIGEST_SIZE:
        raise DecodeError("vote payload must be a proposal txid")
    return payload


def encode_claim(spec: MultisigSpec, extra: bytes = b"") -> bytes:
    return Writer().blob(spec.encode()).blob(extra).getvalue()


def decode_claim(payload: bytes) -> tuple[MultisigSpec, bytes]:
    r = Reader(payload)
    sr = Reader(r.blob())
    spec = MultisigSpec.read(sr)
    sr.done()
    extra = r.blob()
    r.done()
    return spec, extra


@dataclass(frozen=True)
class PegPayload:
    mode: int
    other_chain: str
    source_txid: bytes | None = None

    @property
    def is_credit(self) -> bool:
        return self.mode == PEG_CREDIT


def encode_peg_debit(dest_chain: str) -> bytes:
    return Writer().u8(PEG_DEBIT).text(dest_chain).getvalue()


def encode_peg_credit(source_chain: str, source_txid: bytes) -> bytes:
    return Writer().u8(PEG_CREDIT).text(source_chain).fixed(source_txid, DIGEST_SIZE).getvalue()


def decode_peg(payload: bytes) -> PegPayload:
    r = Reader(payload)
    mode = r.u8()
    if mode == PEG_DEBIT:
        out = PegPayload(mode, r.text())
    elif mode == PEG_CREDIT:
        out = PegPayload(mode, r.text(), r.fixed(DIGEST_SIZE))
    else:
        raise DecodeError(f"unknown peg mode {mode}")
    r.done()
    return out
