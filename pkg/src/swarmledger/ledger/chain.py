"""Per-chain state: block store, longest-chain fork choice, orphans and mempool."""
import itertools
from dataclasses import dataclass, field

from .. import crypto
from .accounts import PEG_KINDS, AccountState, check_tx, replay
from . import payloads
from .types import (
    OK,
    Block,
    ChainParams,
    PowPolicy,
    RoundRobinPolicy,
    SingleMinerPolicy,
    Transaction,
    Verdict,
    fail,
    genesis_block,
    tx_root,
)

PENDING_TTL_INTERVALS = 10


class BlockRejected(Exception):
    def __init__(self, reason: str, detail: str | None = None):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


@dataclass
class ApplyResult:
    status: str  # extended | reorg | side | pending | duplicate
    orphaned: list = field(default_factory=list)
    applied: list = field(default_factory=list)
    head_changed: bool = False

    def merge(self, other: "ApplyResult"):
        self.orphaned.extend(other.orphaned)
        self.applied.extend(other.applied)
        self.head_changed = self.head_changed or other.head_changed


class ChainState:
    """One node's view of one chain.

    Single-owner and mutable; ``view`` always equals a from-genesis replay of
    the canonical branch.
    """

    def __init__(self, params: ChainParams):
        self.params = params
        self.genesis = genesis_block(params)
        g = self.genesis.digest
        self.blocks = {g: self.genesis}
        self._arrival = itertools.count(1)
        self.arrival = {g: 0}
        self.canonical = [g]
        self.orphans = set()
        self.view = AccountState.genesis(params)
        self.mempool = {}
        self.pending = {}  # parent digest -> [(block, held_at_tick)]
        self.links = {}  # chain_id -> ChainState, for peg checks

    @property
    def chain_id(self) -> str:
        return self.params.chain_id

    @property
    def head(self) -> bytes:
        return self.canonical[-1]

    @property
    def head_block(self) -> Block:
        return self.blocks[self.head]

    @property
    def height(self) -> int:
        return len(self.canonical) - 1

    @property
    def balances(self) -> dict:
        return self.view.balances

    @property
    def nonces(self) -> dict:
        return self.view.nonces

    def block_at(self, height: int) -> Block:
        return self.blocks[self.canonical[height]]

    def canonical_blocks(self) -> list:
        return [self.blocks[d] for d in self.canonical[1:]]

    def is_canonical(self, digest: bytes) -> bool:
        b = self.blocks.get(digest)
        return b is not None and b.height <= self.height and self.canonical[b.height] == digest

    def confirmations(self, txid: bytes) -> int:
        h = self.view.tx_heights.get(txid)
        return 0 if h is None else self.height - h + 1

    def containing_block(self, txid: bytes) -> Block | None:
        h = self.view.tx_heights.get(txid)
        return None if h is None else self.block_at(h)

    def find_tx(self, txid: bytes) -> Transaction | None:
        block = self.containing_block(txid)
        if block is None:
            return None
        return next(tx for tx in block.txs if tx.txid == txid)

    def branch(self, digest: bytes) -> list:
        """Blocks from height 1 up to ``digest`` along its parent links."""
        out = []
        block = self.blocks[digest]
        while block.height > 0:
            out.append(block)
            block = self.blocks[block.parent]
        out.reverse()
        return out

    def view_at(self, digest: bytes) -> AccountState:
        if digest == self.head:
            return self.view.copy()
        return replay(self.params, self.branch(digest))

    def add_transaction(self, tx: Transaction) -> Verdict:
        """Admit ``tx`` to the mempool; deferred-valid transactions are kept."""
        if tx.txid in self.mempool or tx.txid in self.view.tx_heights:
            return fail("duplicate")
        v = check_tx(self.view, self.params, tx, self.height + 1, self.links, mempool=True)
        if v.ok or v.retry:
            self.mempool[tx.txid] = tx
            return OK
        return v

    def size_bytes(self) -> int:
        return sum(len(b.encode()) for b in self.blocks.values())

    def _hold(self, block: Block, now: int):
        self._prune_pending(now)
        self.pending.setdefault(block.parent, []).append((block, now))

    def _prune_pending(self, now: int):
        ttl = PENDING_TTL_INTERVALS * self.params.block_interval
        for parent in list(self.pending):
            kept = [(b, t) for b, t in self.pending[parent] if now - t <= ttl]
            if kept:
                self.pending[parent] = kept
            else:
                del self.pending[parent]

    def _purge_mempool(self):
        view = self.view
        for txid, tx in list(self.mempool.items()):
            if txid in view.tx_heights:
                del self.mempool[txid]
            elif tx.kind in PEG_KINDS and tx.nonce == 0 and not tx.signatures:
                if payloads.decode_peg(tx.payload).source_txid in view.peg_redeemed:
                    del self.mempool[txid]
            elif tx.nonce < view.next_nonce(tx.sender):
                del self.mempool[txid]

    def _choose(self, block: Block, view: AccountState) -> ApplyResult:
        d = block.digest
        if block.height <= self.height:
            # first-seen wins ties; shorter branches never win
            self.orphans.add(d)
            return ApplyResult("side", orphaned=[d], applied=[d])
        if block.parent == self.head:
            self.canonical.append(d)
            self.view = view
            self._purge_mempool()
            return ApplyResult("extended", applied=[d], head_changed=True)

        path = self.branch(d)
        fork = 0
        while fork < len(path) and fork + 1 <= self.height and self.canonical[fork + 1] == path[fork].digest:
            fork += 1
        abandoned = self.canonical[fork + 1:]
        self.canonical = self.canonical[: fork + 1] + [b.digest for b in path[fork:]]
        for b in path[fork:]:
            self.orphans.discard(b.digest)
        self.orphans.update(abandoned)
        self.view = view
        # txs unique to the abandoned branch go back ahead of newer arrivals
        returned = {}
        for ad in abandoned:
            for tx in self.blocks[ad].txs:
                if tx.txid not in view.tx_heights and not (tx.kind in PEG_KINDS and tx.nonce == 0
                                                            and not tx.signatures):
                    returned[tx.txid] = tx
        returned.update(self.mempool)
        self.mempool = returned
        self._purge_mempool()
        return ApplyResult("reorg", orphaned=list(abandoned), applied=[d], head_changed=True)


def check_header(params: ChainParams, block: Block, parent: Block) -> Verdict:
    h = block.header
    if h.chain_id != params.chain_id:
        return fail("wrong-chain", "header")
    if h.height != parent.height + 1:
        return fail("height", f"{h.height} after {parent.height}")
    if h.timestamp <= parent.header.timestamp or h.timestamp % params.block_interval:
        return fail("timestamp", str(h.timestamp))
    if len(block.txs) > params.max_tx_per_block:
        return fail("too-many-txs", str(len(block.txs)))
    if h.tx_root != tx_root(block.txs):
        return fail("tx_root")
    sig = block.signature
    if (sig is None or crypto.derive_address(sig.signer) != h.miner
            or not crypto.verify(sig.signer, block.digest, sig)):
        return fail("block-signature")
    policy = params.mining_policy
    if isinstance(policy, PowPolicy):
        if len(h.policy_proof) != 8 or int.from_bytes(block.digest, "big") >= policy.target:
            return fail("invalid-pow")
    elif isinstance(policy, RoundRobinPolicy):
        if h.policy_proof or h.miner != policy.slot(h.height):
            return fail("policy", "round-robin slot")
    elif isinstance(policy, SingleMinerPolicy):
        if h.policy_proof or h.miner != policy.miner:
            return fail("policy", "single miner")
    return OK


def apply_block(state: ChainState, block: Block, now: int | None = None) -> ApplyResult:
    """Store ``block`` and run fork choice.

    Unknown parents park the block in a pending buffer; it is retried when the
    parent arrives and dropped after ``PENDING_TTL_INTERVALS`` intervals.
    """
    if now is None:
        now = block.header.timestamp
    d = block.digest
    if d in state.blocks:
        return ApplyResult("duplicate")
    if block.header.chain_id != state.chain_id:
        raise BlockRejected("wrong-chain", block.header.chain_id)
    parent = state.blocks.get(block.parent)
    if parent is None:
        if not any(b.digest == d for b, _ in state.pending.get(block.parent, [])):
            state._hold(block, now)
        return ApplyResult("pending")

    v = check_header(state.params, block, parent)
    if not v:
        raise BlockRejected("invalid-pow" if v.reason == "invalid-pow" else v.reason, v.detail)
    view = state.view_at(block.parent)
    for tx in block.txs:
        tv = check_tx(view, state.params, tx, block.height, state.links)
        if not tv:
            raise BlockRejected("invalid-tx-in-block", f"{tv.reason} ({tv.detail})")
        view.apply_tx(tx, block.height)
    view.height = block.height

    state.blocks[d] = block
    state.arrival[d] = next(state._arrival)
    result = state._choose(block, view)

    state._prune_pending(now)
    for child, _ in state.pending.pop(d, []):
        try:
            result.merge(apply_block(state, child, now))
        except BlockRejected:
            pass
    return result


def validate_transaction(state: ChainState, tx: Transaction) -> Verdict:
    """Strict check against the canonical head, as for the next block."""
    return check_tx(state.view, state.params, tx, state.height + 1, state.links)


def confirmations(state: ChainState, txid: bytes) -> int:
    return state.confirmations(txid)


def validate_blocks(params: ChainParams, blocks, links=None) -> Verdict:
    """Replay ``blocks`` (heights 1..n) from genesis re-deriving every digest.

    Failures report the chain position and the field that broke.
    """
    prev = genesis_block(params)
    view = AccountState.genesis(params)
    for pos, block in enumerate(blocks, start=1):
        if block.header.parent != prev.digest:
            return fail("parent", "digest link broken", height=pos)
        v = check_header(params, block, prev)
        if not v:
            return Verdict(False, v.reason, v.detail, pos)
        for tx in block.txs:
            tv = check_tx(view, params, tx, block.height, links, offline_pegs=links is None)
            if not tv:
                return Verdict(False, "tx", f"{tv.reason} ({tv.detail})", pos)
            view.apply_tx(tx, block.height)
        view.height = block.height
        prev = block
    return Verdict(True, height=len(blocks))


def validate_chain(state: ChainState) -> Verdict:
    v = validate_blocks(state.params, state.canonical_blocks(), state.links or None)
    if not v:
        return v
    fresh = replay(state.params, state.canonical_blocks())
    if fresh.balances != state.view.balances or fresh.nonces != state.view.nonces:
        return fail("state", "balances diverge from replay", height=state.height)
    return v
