"""Transactions, block headers, blocks and chain parameters."""
import enum
import functools
from dataclasses import dataclass, field, replace

from .. import crypto
from ..crypto import ADDRESS_SIZE, DIGEST_SIZE, Signature
from ..encoding import DecodeError, Reader, Writer

MAX_PAYLOAD = 1024
# decode-side sanity bound; oversize payloads still need to reach validation
_DECODE_PAYLOAD_LIMIT = 1 << 20
_DECODE_LIST_LIMIT = 1 << 20


class TxKind(enum.IntEnum):
    TRANSFER = 0
    VOTE_PROPOSAL = 1
    VOTE = 2
    DATA = 3
    MULTISIG_CALL = 4
    MULTISIG_CLAIM = 5
    PEG_OUT = 6
    PEG_IN = 7
    ATTESTATION = 8

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class Transaction:
    chain_id: str
    kind: TxKind
    sender: bytes
    nonce: int
    outputs: tuple = ()
    payload: bytes = b""
    signatures: tuple = ()
    txid: bytes = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", TxKind(self.kind))
        object.__setattr__(self, "outputs", tuple((bytes(a), int(v)) for a, v in self.outputs))
        object.__setattr__(self, "signatures", tuple(self.signatures))
        object.__setattr__(self, "txid", crypto.hash(self.body()))

    def body(self) -> bytes:
        """Bytes covered by the txid and by every signature."""
        w = Writer()
        w.text(self.chain_id).u8(self.kind).fixed(self.sender, ADDRESS_SIZE).u64(self.nonce)
        w.count(len(self.outputs))
        for addr, amount in self.outputs:
            w.fixed(addr, ADDRESS_SIZE).u64(amount)
        w.blob(self.payload)
        return w.getvalue()

    def encode(self) -> bytes:
        w = Writer().raw(self.body()).count(len(self.signatures))
        for sig in self.signatures:
            sig.encode(w)
        return w.getvalue()

    @classmethod
    def read(cls, r: Reader) -> "Transaction":
        chain_id = r.text()
        try:
            kind = TxKind(r.u8())
        except ValueError as exc:
            raise DecodeError(str(exc)) from None
        sender = r.fixed(ADDRESS_SIZE)
        nonce = r.u64()
        n_out = r.count()
        if n_out > _DECODE_LIST_LIMIT:
            raise DecodeError("too many outputs")
        outputs = tuple((r.fixed(ADDRESS_SIZE), r.u64()) for _ in range(n_out))
        payload = r.blob(_DECODE_PAYLOAD_LIMIT)
        n_sig = r.count()
        if n_sig > 256:
            raise DecodeError("too many signatures")
        sigs = tuple(Signature.decode(r) for _ in range(n_sig))
        return cls(chain_id, kind, sender, nonce, outputs, payload, sigs)

    @classmethod
    def decode(cls, data: bytes) -> "Transaction":
        r = Reader(data)
        tx = cls.read(r)
        r.done()
        return tx

    @property
    def total_out(self) -> int:
        return sum(v for _, v in self.outputs)

    def signed(self, private: bytes) -> "Transaction":
        return replace(self, signatures=self.signatures + (crypto.sign(private, self.txid),))


def make_tx(keys, chain_id, kind, nonce, outputs=(), payload=b"", sender=None) -> Transaction:
    """Build and sign a transaction; ``sender`` defaults to the key's own address."""
    tx = Transaction(chain_id, kind, sender or keys.address, nonce, tuple(outputs), payload)
    return tx.signed(keys.private)


def tx_root(txs) -> bytes:
    return crypto.hash(b"".join(tx.txid for tx in txs))


@dataclass(frozen=True)
class BlockHeader:
    chain_id: str
    height: int
    parent: bytes
    tx_root: bytes
    miner: bytes
    timestamp: int
    policy_proof: bytes = b""

    def encode(self) -> bytes:
        w = Writer().text(self.chain_id).u64(self.height)
        w.fixed(self.parent, DIGEST_SIZE).fixed(self.tx_root, DIGEST_SIZE)
        w.fixed(self.miner, ADDRESS_SIZE).u64(self.timestamp).blob(self.policy_proof)
        return w.getvalue()

    @classmethod
    def read(cls, r: Reader) -> "BlockHeader":
        return cls(
            chain_id=r.text(),
            height=r.u64(),
            parent=r.fixed(DIGEST_SIZE),
            tx_root=r.fixed(DIGEST_SIZE),
            miner=r.fixed(ADDRESS_SIZE),
            timestamp=r.u64(),
            policy_proof=r.blob(64),
        )

    @property
    def digest(self) -> bytes:
        return crypto.hash(self.encode())


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    txs: tuple = ()
    # miner's signature over the header digest; absent only on genesis
    signature: Signature | None = None
    digest: bytes = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "txs", tuple(self.txs))
        object.__setattr__(self, "digest", self.header.digest)

    @property
    def height(self) -> int:
        return self.header.height

    @property
    def parent(self) -> bytes:
        return self.header.parent

    def encode(self) -> bytes:
        w = Writer().blob(self.header.encode())
        w.count(len(self.txs))
        for tx in self.txs:
            w.blob(tx.encode())
        if self.signature is None:
            w.u8(0)
        else:
            w.u8(1)
            self.signature.encode(w)
        return w.getvalue()

    @classmethod
    def decode(cls, data: bytes) -> "Block":
        r = Reader(data)
        hr = Reader(r.blob())
        header = BlockHeader.read(hr)
        hr.done()
        n = r.count()
        if n > _DECODE_LIST_LIMIT:
            raise DecodeError("too many transactions")
        txs = tuple(Transaction.decode(r.blob()) for _ in range(n))
        flag = r.u8()
        if flag not in (0, 1):
            raise DecodeError("bad signature flag")
        sig = Signature.decode(r) if flag else None
        r.done()
        return cls(header, txs, sig)



@functools.lru_cache(maxsize=1 << 12)
def decode_block(data: bytes) -> Block:
    """``Block.decode`` memoized on the exact bytes; blocks are immutable."""
    return Block.decode(data)


@functools.lru_cache(maxsize=1 << 14)
def decode_tx(data: bytes) -> Transaction:
    return Transaction.decode(data)


@dataclass(frozen=True)
class PowPolicy:
    target: int
    attempts: int = 16

    @classmethod
    def from_probability(cls, p: float, attempts: int = 16) -> "PowPolicy":
        """Target giving each hash attempt success probability ``p``."""
        if not 0 < p <= 1:
            raise ValueError("p must be in (0, 1]")
        return cls(target=min(int(p * (1 << 256)), (1 << 256) - 1), attempts=attempts)


@dataclass(frozen=True)
class RoundRobinPolicy:
    miners: tuple

    def __post_init__(self):
        if not self.miners:
            raise ValueError("round robin needs at least one miner")
        object.__setattr__(self, "miners", tuple(bytes(m) for m in self.miners))

    def slot(self, height: int) -> bytes:
        return self.miners[height % len(self.miners)]


@dataclass(frozen=True)
class SingleMinerPolicy:
    miner: bytes


_POLICY_TAGS = {PowPolicy: 0, RoundRobinPolicy: 1, SingleMinerPolicy: 2}


def encode_policy(policy, w: Writer):
    w.u8(_POLICY_TAGS[type(policy)])
    if isinstance(policy, PowPolicy):
        w.fixed(policy.target.to_bytes(32, "big"), 32).u32(policy.attempts)
    elif isinstance(policy, RoundRobinPolicy):
        w.count(len(policy.miners))
        for m in policy.miners:
            w.fixed(m, ADDRESS_SIZE)
    else:
        w.fixed(policy.miner, ADDRESS_SIZE)


def read_policy(r: Reader):
    tag = r.u8()
    if tag == 0:
        return PowPolicy(int.from_bytes(r.fixed(32), "big"), r.u32())
    if tag == 1:
        n = r.count()
        if not 0 < n <= 4096:
            raise DecodeError("bad miner list")
        return RoundRobinPolicy(tuple(r.fixed(ADDRESS_SIZE) for _ in range(n)))
    if tag == 2:
        return SingleMinerPolicy(r.fixed(ADDRESS_SIZE))
    raise DecodeError(f"unknown mining policy tag {tag}")


@dataclass(frozen=True)
class ChainParams:
    chain_id: str
    mining_policy: object
    block_interval: int = 10
    max_tx_per_block: int = 100
    confirmation_depth: int = 3
    genesis_allocation: tuple = ()
    # (parent chain id, peg_out txid) for a pegged sidechain
    parent_peg: tuple | None = None

    def __post_init__(self):
        errors = []
        if self.block_interval < 1:
            errors.append("block_interval must be >= 1")
        if self.max_tx_per_block < 1:
            errors.append("max_tx_per_block must be >= 1")
        if self.confirmation_depth < 1:
            errors.append("confirmation_depth must be >= 1")
        if errors:
            raise ValueError("; ".join(errors))
        object.__setattr__(
            self, "genesis_allocation", tuple((bytes(a), int(v)) for a, v in self.genesis_allocation)
        )

    @property
    def genesis_total(self) -> int:
        return sum(v for _, v in self.genesis_allocation)

    def encode(self) -> bytes:
        w = Writer().text(self.chain_id).u64(self.block_interval).u32(self.max_tx_per_block)
        encode_policy(self.mining_policy, w)
        w.u32(self.confirmation_depth).count(len(self.genesis_allocation))
        for addr, amount in self.genesis_allocation:
            w.fixed(addr, ADDRESS_SIZE).u64(amount)
        if self.parent_peg is None:
            w.u8(0)
        else:
            w.u8(1).text(self.parent_peg[0]).fixed(self.parent_peg[1], DIGEST_SIZE)
        return w.getvalue()

    @classmethod
    def decode(cls, data: bytes) -> "ChainParams":
        r = Reader(data)
        chain_id = r.text()
        interval = r.u64()
        max_tx = r.u32()
        policy = read_policy(r)
        depth = r.u32()
        n = r.count()
        if n > _DECODE_LIST_LIMIT:
            raise DecodeError("allocation list too long")
        alloc = tuple((r.fixed(ADDRESS_SIZE), r.u64()) for _ in range(n))
        flag = r.u8()
        if flag == 0:
            peg = None
        elif flag == 1:
            peg = (r.text(), r.fixed(DIGEST_SIZE))
        else:
            raise DecodeError("bad parent_peg flag")
        r.done()
        try:
            return cls(chain_id, policy, interval, max_tx, depth, alloc, peg)
        except ValueError as exc:
            raise DecodeError(str(exc)) from None


def genesis_block(params: ChainParams) -> Block:
    """Height-0 sentinel; its tx_root commits to the full parameter set."""
    header = BlockHeader(
        chain_id=params.chain_id,
        height=0,
        parent=crypto.ZERO_DIGEST,
        tx_root=crypto.hash(params.encode()),
        miner=crypto.ZERO_ADDRESS,
        timestamp=0,
    )
    return Block(header)


@dataclass(frozen=True)
class Verdict:
    """Outcome of a check. Truthy iff ``ok``."""

    ok: bool
    reason: str | None = None
    detail: str | None = None
    height: int | None = None
    # the failing condition may clear later (future nonce, unfunded, unknown reference)
    retry: bool = False

    def __bool__(self):
        return self.ok


OK = Verdict(True)


def fail(reason, detail=None, retry=False, height=None) -> Verdict:
    return Verdict(False, reason, detail, height, retry)
