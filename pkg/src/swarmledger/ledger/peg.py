"""Pegged sidechains: token moves between linked chains.

A move is a signed debit on the source chain (``peg_out`` towards a
sidechain, ``peg_in`` back to the parent) and an unsigned credit that any
miner of the destination chain adds once the debit has reached the source
chain's confirmation depth. A sidechain's genesis allocation is exactly
the peg_out that created it.
"""
from dataclasses import replace

from ..crypto import KeyPair
from . import payloads
from .chain import ChainState
from .types import ChainParams, Transaction, TxKind, make_tx


class PegError(ValueError):
    def __init__(self, reason: str, detail: str | None = None):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason


def link(a: ChainState, b: ChainState):
    a.links[b.chain_id] = b
    b.links[a.chain_id] = a


def debit_tx(keys: KeyPair, source: ChainState, dest_chain: str, amount: int,
             kind: TxKind = TxKind.PEG_OUT, nonce: int | None = None,
             address: bytes | None = None) -> Transaction:
    if amount < 1:
        raise PegError("zero-amount", "peg amount must be >= 1")
    if nonce is None:
        nonce = source.view.next_nonce(keys.address)
    return make_tx(
        keys, source.chain_id, kind, nonce,
        [(address or keys.address, amount)],
        payloads.encode_peg_debit(dest_chain),
    )


def create_sidechain(parent_state: ChainState, params: ChainParams, peg_out: Transaction,
                     min_confirmations: int | None = None) -> ChainState:
    """Open a sidechain funded by a confirmed ``peg_out`` on the parent."""
    if params.chain_id == parent_state.chain_id or params.chain_id in parent_state.links:
        raise PegError("duplicate-chain-id", params.chain_id)
    if params.genesis_allocation:
        raise PegError("invalid-params", "sidechain supply comes only from the peg")
    if peg_out.kind != TxKind.PEG_OUT:
        raise PegError("invalid-peg-out", "wrong kind")
    debit = parent_state.view.peg_debits.get(peg_out.txid)
    if debit is None:
        raise PegError("invalid-peg-out", "not on the parent's canonical chain")
    if debit.dest_chain != params.chain_id:
        raise PegError("invalid-peg-out", f"destined for {debit.dest_chain!r}")
    need = parent_state.params.confirmation_depth if min_confirmations is None else min_confirmations
    if parent_state.confirmations(peg_out.txid) < need:
        raise PegError("invalid-peg-out", "not yet confirmed")
    side = ChainState(replace(
        params,
        genesis_allocation=((debit.address, debit.amount),),
        parent_peg=(parent_state.chain_id, peg_out.txid),
    ))
    link(parent_state, side)
    return side


def peg_in(side_state: ChainState, parent_state: ChainState, tx: Transaction):
    """Submit a sidechain-to-parent move; the parent credit follows on confirmation."""
    if tx.kind != TxKind.PEG_IN or tx.chain_id != side_state.chain_id:
        raise PegError("invalid-peg-in", "wrong kind or chain")
    peg = payloads.decode_peg(tx.payload)
    if peg.is_credit or peg.other_chain != parent_state.chain_id:
        raise PegError("invalid-peg-in", "must debit toward the parent chain")
    if tx.total_out < 1 or any(v < 1 for _, v in tx.outputs):
        raise PegError("zero-amount")
    if tx.total_out > side_state.view.balance(tx.sender):
        raise PegError("insufficient-balance",
                       f"{tx.total_out} > {side_state.view.balance(tx.sender)}")
    link(parent_state, side_state)
    v = side_state.add_transaction(tx)
    if not v:
        raise PegError(v.reason, v.detail)
    return side_state, parent_state


def in_flight(states: dict) -> int:
    """Tokens debited on one chain and not yet credited on their destination."""
    total = 0
    for st in states.values():
        for debit in st.view.peg_debits.values():
            dest = states.get(debit.dest_chain)
            if dest is None or debit.txid not in dest.view.peg_redeemed:
                total += debit.amount
    return total


def cross_chain_supply(states: dict) -> int:
    return sum(st.view.total for st in states.values()) + in_flight(states)


def root_supply(states: dict) -> int:
    return sum(st.params.genesis_total for st in states.values() if st.params.parent_peg is None)
