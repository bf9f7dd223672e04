"""Independent re-derivations used as test oracles.

These deliberately avoid the library's AccountState and tally code: they
walk raw block contents with the simplest possible bookkeeping.
"""
import hashlib

from swarmledger.ledger import Block, ChainParams
from swarmledger.encoding import Reader

PEG_KINDS = (6, 7)  # peg_out, peg_in
VOTE = 2


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def split_dump(data: bytes):
    r = Reader(data)
    params = ChainParams.decode(r.blob())
    blocks = []
    while r.remaining:
        blocks.append(Block.decode(r.blob()))
    return params, blocks


def balances(params, blocks) -> dict:
    """Naive balance map: genesis, then debit sender / credit outputs per tx."""
    bal = {}
    for addr, amount in params.genesis_allocation:
        bal[addr] = bal.get(addr, 0) + amount
    for block in blocks:
        for tx in block.txs:
            peg = int(tx.kind) in PEG_KINDS
            credit = peg and tx.payload[:1] == b"\x01"
            if not credit:
                bal[tx.sender] = bal.get(tx.sender, 0) - sum(v for _, v in tx.outputs)
            # a peg debit's output is paid out on the other chain
            if credit or not peg:
                for addr, v in tx.outputs:
                    bal[addr] = bal.get(addr, 0) + v
    return {a: v for a, v in bal.items() if v}


def vote_scan(blocks, proposal_txid: bytes, options, window: int) -> tuple:
    """Count vote txs per option inside [h0, h0 + window]."""
    h0 = None
    for block in blocks:
        if any(tx.txid == proposal_txid for tx in block.txs):
            h0 = block.height
    assert h0 is not None, "proposal not in chain"
    counts = dict.fromkeys(options, 0)
    for block in blocks:
        if not h0 <= block.height <= h0 + window:
            continue
        for tx in block.txs:
            if int(tx.kind) == VOTE and tx.payload == proposal_txid:
                for addr, v in tx.outputs:
                    if addr in counts:
                        counts[addr] += v
    return tuple(counts[o] for o in options)


def cross_chain_total(chains) -> tuple:
    """(tokens on every chain plus pegs in flight, sum of genesis allocations)."""
    on_chain = 0
    debits, redeemed = {}, set()
    for state in chains.values():
        blocks = state.canonical_blocks()
        on_chain += sum(balances(state.params, blocks).values())
        for block in blocks:
            for tx in block.txs:
                if int(tx.kind) not in PEG_KINDS:
                    continue
                if tx.payload[:1] == b"\x01":
                    redeemed.add(tx.payload[-32:])
                else:
                    debits[tx.txid] = sum(v for _, v in tx.outputs)
    in_flight = sum(v for txid, v in debits.items() if txid not in redeemed)
    genesis = sum(a for st in chains.values() for _, a in st.params.genesis_allocation)
    return on_chain + in_flight, genesis
