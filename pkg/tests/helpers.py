from swarmledger import crypto
from swarmledger.ledger import (
    ChainParams,
    ChainState,
    RoundRobinPolicy,
    apply_block,
    mine_block,
)


def keys(i: int):
    return crypto.generate_keypair(bytes([i]) * 32)


def make_chain(members, balance=100, chain_id="main", **kw):
    kw.setdefault("mining_policy", RoundRobinPolicy(tuple(k.address for k in members)))
    params = ChainParams(
        chain_id=chain_id,
        genesis_allocation=tuple((k.address, balance) for k in members),
        **kw,
    )
    return ChainState(params)


def slot_keys(state, keyring, height):
    policy = state.params.mining_policy
    want = policy.slot(height) if hasattr(policy, "slot") else getattr(policy, "miner", None)
    if want is None:
        return keyring[0]
    return next(k for k in keyring if k.address == want)


def mine(state, keyring, tick=None):
    """Mine the next block on ``state`` with whoever owns the slot."""
    height = state.height + 1
    iv = state.params.block_interval
    if tick is None:
        tick = max(height * iv, (state.head_block.header.timestamp // iv + 1) * iv)
    block = mine_block(state, tick, slot_keys(state, keyring, height))
    assert block is not None
    return block


def grow(state, keyring, n=1):
    out = []
    for _ in range(n):
        block = mine(state, keyring)
        apply_block(state, block)
        out.append(block)
    return out
