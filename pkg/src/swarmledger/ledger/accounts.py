"""Account balances, nonces and the registries derived from replaying a chain."""
from dataclasses import dataclass

from .. import crypto
from ..crypto import MultisigSpec
from ..encoding import DecodeError
from . import payloads
from .types import MAX_PAYLOAD, OK, ChainParams, Transaction, TxKind, fail

ESCROW_TIMEOUT = 10  # blocks after the call before the caller may reclaim alone
PEG_KINDS = (TxKind.PEG_OUT, TxKind.PEG_IN)


@dataclass(frozen=True)
class Proposal:
    txid: bytes
    proposer: bytes
    options: tuple
    window: int
    height: int


@dataclass(frozen=True)
class Escrow:
    funder: bytes
    height: int


@dataclass(frozen=True)
class PegDebit:
    txid: bytes
    kind: TxKind
    dest_chain: str
    sender: bytes
    address: bytes
    amount: int
    height: int


class AccountState:
    """Everything a chain's history implies, as of one block."""

    def __init__(self):
        self.height = 0
        self.balances = {}
        self.nonces = {}
        self.proposals = {}
        self.option_owner = {}  # option address -> proposal txid
        self.votes = set()  # (voter, proposal txid)
        self.escrows = {}
        self.peg_debits = {}
        self.peg_redeemed = set()
        self.pegged_in = 0
        self.pegged_out = 0
        self.tx_heights = {}

    @classmethod
    def genesis(cls, params: ChainParams) -> "AccountState":
        st = cls()
        for addr, amount in params.genesis_allocation:
            st._credit(addr, amount)
        if params.parent_peg is not None:
            st.peg_redeemed.add(params.parent_peg[1])
        return st

    def copy(self) -> "AccountState":
        st = AccountState.__new__(AccountState)
        st.height = self.height
        st.balances = dict(self.balances)
        st.nonces = dict(self.nonces)
        st.proposals = dict(self.proposals)
        st.option_owner = dict(self.option_owner)
        st.votes = set(self.votes)
        st.escrows = dict(self.escrows)
        st.peg_debits = dict(self.peg_debits)
        st.peg_redeemed = set(self.peg_redeemed)
        st.pegged_in = self.pegged_in
        st.pegged_out = self.pegged_out
        st.tx_heights = dict(self.tx_heights)
        return st

    def balance(self, addr: bytes) -> int:
        return self.balances.get(addr, 0)

    def next_nonce(self, addr: bytes) -> int:
        return self.nonces.get(addr, 0) + 1

    @property
    def total(self) -> int:
        return sum(self.balances.values())

    def _credit(self, addr, amount):
        self.balances[addr] = self.balances.get(addr, 0) + amount

    def _debit(self, addr, amount):
        left = self.balances.get(addr, 0) - amount
        if left < 0:
            raise ValueError("negative balance")
        if left:
            self.balances[addr] = left
        else:
            self.balances.pop(addr, None)

    def apply_tx(self, tx: Transaction, height: int):
        """Apply effects of an already-validated transaction."""
        if tx.kind in PEG_KINDS:
            peg = payloads.decode_peg(tx.payload)
            if peg.is_credit:
                for addr, amount in tx.outputs:
                    self._credit(addr, amount)
                self.peg_redeemed.add(peg.source_txid)
                self.pegged_in += tx.total_out
                self.tx_heights[tx.txid] = height
                return
            self._debit(tx.sender, tx.total_out)
            self.nonces[tx.sender] = tx.nonce
            addr, amount = tx.outputs[0]
            self.peg_debits[tx.txid] = PegDebit(
                tx.txid, tx.kind, peg.other_chain, tx.sender, addr, amount, height
            )
            self.pegged_out += amount
            self.tx_heights[tx.txid] = height
            return

        self._debit(tx.sender, tx.total_out)
        self.nonces[tx.sender] = tx.nonce
        for addr, amount in tx.outputs:
            self._credit(addr, amount)
        if tx.kind == TxKind.VOTE_PROPOSAL:
            window, options = payloads.decode_proposal(tx.payload)
            self.proposals[tx.txid] = Proposal(tx.txid, tx.sender, options, window, height)
            for opt in options:
                self.option_owner[opt] = tx.txid
        elif tx.kind == TxKind.VOTE:
            self.votes.add((tx.sender, tx.payload))
        elif tx.kind == TxKind.MULTISIG_CALL:
            spec = MultisigSpec.decode(tx.payload)
            self.escrows.setdefault(spec.address, Escrow(tx.sender, height))
        self.tx_heights[tx.txid] = height


def _single_signer_ok(tx: Transaction) -> bool:
    return any(
        crypto.derive_address(sig.signer) == tx.sender and crypto.verify(sig.signer, tx.txid, sig)
        for sig in tx.signatures
    )


def count_multisig(spec: MultisigSpec, tx: Transaction) -> int:
    """Distinct member keys with a valid signature over the txid."""
    members = set(spec.pubkeys)
    good = {
        sig.signer
        for sig in tx.signatures
        if sig.signer in members and crypto.verify(sig.signer, tx.txid, sig)
    }
    return len(good)


def check_tx(view: AccountState, params: ChainParams, tx: Transaction, height: int,
             links=None, mempool: bool = False, offline_pegs: bool = False):
    """Validate ``tx`` for inclusion at ``height`` on top of ``view``.

    With ``mempool=True`` a future nonce is accepted, since earlier
    transactions from the same sender may still be in flight.
    """
    if tx.chain_id != params.chain_id:
        return fail("wrong-chain", f"{tx.chain_id!r} != {params.chain_id!r}")
    if len(tx.payload) > MAX_PAYLOAD:
        return fail("oversize-payload", f"{len(tx.payload)} > {MAX_PAYLOAD}")
    if any(amount < 1 for _, amount in tx.outputs):
        return fail("zero-amount")

    if tx.kind in PEG_KINDS:
        try:
            peg = payloads.decode_peg(tx.payload)
        except DecodeError as exc:
            return fail("malformed", str(exc))
        if peg.is_credit:
            return _check_peg_credit(view, params, tx, peg, links, offline_pegs)

    # authorization
    if tx.kind == TxKind.MULTISIG_CLAIM:
        try:
            spec, _ = payloads.decode_claim(tx.payload)
        except DecodeError as exc:
            return fail("malformed", str(exc))
        if spec.address != tx.sender:
            return fail("malformed", "claim spec does not hash to sender")
        if count_multisig(spec, tx) < spec.m and not _is_timeout_refund(view, tx, height):
            return fail("insufficient-multisig", f"{count_multisig(spec, tx)} of {spec.m}")
    elif not _single_signer_ok(tx):
        return fail("bad-signature")

    expected = view.next_nonce(tx.sender)
    if tx.nonce < expected or (tx.nonce > expected and not mempool):
        return fail("bad-nonce", f"got {tx.nonce}, expected {expected}", retry=tx.nonce > expected)

    structural = _check_kind(view, params, tx)
    if not structural:
        return structural

    if tx.total_out > view.balance(tx.sender):
        # may clear once incoming transfers land
        return fail("insufficient-balance", f"{tx.total_out} > {view.balance(tx.sender)}",
                    retry=True)
    return OK


def _check_kind(view, params, tx):
    kind = tx.kind
    if kind != TxKind.VOTE and any(addr in view.option_owner for addr, _ in tx.outputs):
        return fail("malformed", "only votes may credit a ballot option")
    if kind == TxKind.TRANSFER:
        if not tx.outputs:
            return fail("zero-amount", "transfer without outputs")
    elif kind == TxKind.VOTE_PROPOSAL:
        try:
            window, options = payloads.decode_proposal(tx.payload)
        except DecodeError as exc:
            return fail("malformed", str(exc))
        if tx.outputs:
            return fail("malformed", "proposal carries no outputs")
        fresh = tuple(payloads.option_address(tx.sender, tx.nonce, i) for i in range(len(options)))
        if options != fresh or window < 1:
            return fail("malformed", "option addresses must be freshly derived")
    elif kind == TxKind.VOTE:
        try:
            ref = payloads.decode_vote(tx.payload)
        except DecodeError as exc:
            return fail("malformed", str(exc))
        prop = view.proposals.get(ref)
        if prop is None:
            return fail("unknown-proposal", retry=True)
        if len(tx.outputs) != 1 or tx.outputs[0][1] != 1 or tx.outputs[0][0] not in prop.options:
            return fail("malformed", "a vote moves exactly one token to an option")
        if (tx.sender, ref) in view.votes:
            return fail("duplicate-vote")
    elif kind == TxKind.MULTISIG_CALL:
        try:
            spec = MultisigSpec.decode(tx.payload)
        except DecodeError as exc:
            return fail("malformed", str(exc))
        if len(tx.outputs) != 1 or tx.outputs[0][0] != spec.address:
            return fail("malformed", "call must fund its multisig address")
        esc = view.escrows.get(spec.address)
        if esc is not None and esc.funder != tx.sender:
            return fail("malformed", "escrow already opened by another caller")
    elif kind == TxKind.MULTISIG_CLAIM:
        if not tx.outputs:
            return fail("zero-amount", "claim without outputs")
    elif kind in PEG_KINDS:
        peg = payloads.decode_peg(tx.payload)
        if peg.other_chain == params.chain_id:
            return fail("malformed", "peg destination is this chain")
        if len(tx.outputs) != 1:
            return fail("malformed", "peg debit has exactly one output")
    elif kind == TxKind.ATTESTATION:
        if len(tx.payload) != crypto.DIGEST_SIZE or tx.outputs:
            return fail("malformed", "attestation payload is one digest")
    return OK


def _is_timeout_refund(view: AccountState, tx: Transaction, height: int) -> bool:
    esc = view.escrows.get(tx.sender)
    if esc is None or height < esc.height + ESCROW_TIMEOUT:
        return False
    if any(addr != esc.funder for addr, _ in tx.outputs):
        return False
    return any(
        crypto.derive_address(sig.signer) == esc.funder and crypto.verify(sig.signer, tx.txid, sig)
        for sig in tx.signatures
    )


def _check_peg_credit(view, params, tx, peg, links, offline):
    if tx.nonce != 0:
        return fail("malformed", "peg credit carries nonce 0")
    if len(tx.outputs) != 1:
        return fail("malformed", "peg credit has exactly one output")
    if peg.source_txid in view.peg_redeemed:
        return fail("duplicate-peg-credit")
    source = (links or {}).get(peg.other_chain)
    if source is None:
        if offline:
            return OK
        return fail("unknown-peg-source", peg.other_chain, retry=True)
    debit = source.view.peg_debits.get(peg.source_txid)
    if debit is None:
        return fail("unknown-peg-source", "debit not on source chain", retry=True)
    if (debit.dest_chain != params.chain_id or debit.kind != tx.kind or debit.sender != tx.sender
            or tx.outputs != ((debit.address, debit.amount),)):
        return fail("malformed", "credit does not match its debit")
    if source.confirmations(peg.source_txid) < source.params.confirmation_depth:
        return fail("unknown-peg-source", "debit not yet confirmed", retry=True)
    return OK


def replay(params: ChainParams, blocks) -> AccountState:
    """Fresh from-genesis replay over ``blocks`` (heights 1..n, in order)."""
    st = AccountState.genesis(params)
    for block in blocks:
        for tx in block.txs:
            st.apply_tx(tx, block.height)
        st.height = block.height
    return st
