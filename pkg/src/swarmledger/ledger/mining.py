"""Block production under the three mining policies."""
from .. import crypto
from ..crypto import KeyPair
from ..encoding import Writer
from . import payloads
from .accounts import PegDebit, check_tx
from .chain import ChainState
from .types import (
    Block,
    BlockHeader,
    PowPolicy,
    RoundRobinPolicy,
    SingleMinerPolicy,
    Transaction,
    tx_root,
)


def peg_credit_tx(debit: PegDebit, source_chain: str, dest_chain: str) -> Transaction:
    """Unsigned credit mirroring a confirmed debit on ``source_chain``."""
    return Transaction(
        dest_chain,
        debit.kind,
        debit.sender,
        0,
        ((debit.address, debit.amount),),
        payloads.encode_peg_credit(source_chain, debit.txid),
    )


def may_mine(state: ChainState, tick: int, miner: bytes) -> bool:
    params = state.params
    if tick % params.block_interval or tick <= state.head_block.header.timestamp:
        return False
    policy = params.mining_policy
    height = state.height + 1
    if isinstance(policy, RoundRobinPolicy):
        return miner == policy.slot(height)
    if isinstance(policy, SingleMinerPolicy):
        return miner == policy.miner
    return True


def pack(state: ChainState, height: int) -> list:
    """Pick up to max_tx_per_block transactions, pending peg credits first,
    then mempool entries in arrival order."""
    params = state.params
    limit = params.max_tx_per_block
    view = state.view.copy()
    chosen = []

    for cid in sorted(state.links):
        source = state.links[cid]
        for debit in list(source.view.peg_debits.values()):
            if len(chosen) >= limit:
                break
            if debit.dest_chain != params.chain_id or debit.txid in view.peg_redeemed:
                continue
            tx = peg_credit_tx(debit, cid, params.chain_id)
            if check_tx(view, params, tx, height, state.links):
                view.apply_tx(tx, height)
                chosen.append(tx)

    taken = set()
    progress = True
    while progress and len(chosen) < limit:
        progress = False
        for txid, tx in list(state.mempool.items()):
            if len(chosen) >= limit:
                break
            if txid in taken:
                continue
            if check_tx(view, params, tx, height, state.links):
                view.apply_tx(tx, height)
                chosen.append(tx)
                taken.add(txid)
                progress = True
    return chosen


def mine_block(state: ChainState, tick: int, keys: KeyPair) -> Block | None:
    """Try to produce the next block at ``tick``; ``None`` when not entitled
    or, under proof of work, when the bounded nonce search comes up empty."""
    if not may_mine(state, tick, keys.address):
        return None
    params = state.params
    height = state.height + 1
    txs = pack(state, height)
    root = tx_root(txs)

    def header(proof: bytes) -> BlockHeader:
        return BlockHeader(params.chain_id, height, state.head, root, keys.address, tick, proof)

    policy = params.mining_policy
    if isinstance(policy, PowPolicy):
        seed = Writer().fixed(keys.address, crypto.ADDRESS_SIZE).u64(height).u64(tick).getvalue()
        start = int.from_bytes(crypto.hash(seed)[:8], "big")
        for i in range(policy.attempts):
            h = header(((start + i) % (1 << 64)).to_bytes(8, "big"))
            if int.from_bytes(h.digest, "big") < policy.target:
                break
        else:
            return None
    else:
        h = header(b"")
    return Block(h, txs, crypto.sign(keys.private, h.digest))
