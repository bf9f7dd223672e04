import pytest

from swarmledger.ledger import (
    ChainParams,
    PegError,
    SingleMinerPolicy,
    TxKind,
    create_sidechain,
    cross_chain_supply,
    debit_tx,
    in_flight,
    peg_in,
    root_supply,
    validate_chain,
    validate_transaction,
)
from swarmledger.ledger.accounts import PegDebit
from swarmledger.ledger.mining import peg_credit_tx

from helpers import grow, make_chain
from oracles import balances


def side_params(miner, k=1):
    return ChainParams("side", SingleMinerPolicy(miner.address), confirmation_depth=k)


def pegged(alice, bob, amount=10, k=2):
    main = make_chain([alice, bob], balance=50, confirmation_depth=k)
    tx = debit_tx(alice, main, "side", amount)
    assert main.add_transaction(tx)
    grow(main, [alice, bob], k)
    side = create_sidechain(main, side_params(alice), tx)
    return main, side, tx


def supply_ok(*states):
    chains = {s.chain_id: s for s in states}
    return cross_chain_supply(chains) == root_supply(chains)


def test_peg_out_moves_tokens(alice, bob):
    main, side, tx = pegged(alice, bob)
    assert main.view.balance(alice.address) == 40
    assert side.view.balance(alice.address) == 10
    assert supply_ok(main, side)
    assert in_flight({"main": main, "side": side}) == 0
    assert side.params.parent_peg == ("main", tx.txid)


def test_sidechain_runs_its_own_policy(alice, bob):
    main, side, _ = pegged(alice, bob)
    grow(side, [alice, bob], 3)
    assert all(b.header.miner == alice.address for b in side.canonical_blocks())
    assert {b.header.miner for b in main.canonical_blocks()} == {alice.address, bob.address}
    assert validate_chain(side)


def test_unconfirmed_peg_out_rejected(alice, bob):
    main = make_chain([alice, bob], balance=50, confirmation_depth=3)
    tx = debit_tx(alice, main, "side", 5)
    main.add_transaction(tx)
    grow(main, [alice, bob], 2)
    with pytest.raises(PegError) as exc:
        create_sidechain(main, side_params(alice), tx)
    assert exc.value.reason == "invalid-peg-out"


def test_duplicate_chain_id(alice, bob):
    main, side, tx = pegged(alice, bob)
    with pytest.raises(PegError) as exc:
        create_sidechain(main, side_params(alice), tx)
    assert exc.value.reason == "duplicate-chain-id"


def test_sidechain_params_must_not_mint(alice, bob):
    main = make_chain([alice, bob], balance=50, confirmation_depth=1)
    tx = debit_tx(alice, main, "side", 5)
    main.add_transaction(tx)
    grow(main, [alice, bob])
    params = ChainParams("side", SingleMinerPolicy(alice.address), genesis_allocation=((alice.address, 5),))
    with pytest.raises(PegError) as exc:
        create_sidechain(main, params, tx)
    assert exc.value.reason == "invalid-params"


def settle_peg_in(main, side, alice, bob, amount):
    tx = debit_tx(alice, side, "main", amount, kind=TxKind.PEG_IN)
    peg_in(side, main, tx)
    grow(side, [alice], side.params.confirmation_depth)
    assert in_flight({"main": main, "side": side}) == amount
    assert supply_ok(main, side)
    grow(main, [alice, bob])
    return tx


def test_peg_in_restores_balances(alice, bob):
    main, side, _ = pegged(alice, bob)
    settle_peg_in(main, side, alice, bob, 10)
    assert main.view.balance(alice.address) == 50
    assert side.view.balance(alice.address) == 0
    assert supply_ok(main, side)
    assert main.view.balances == balances(main.params, main.canonical_blocks())


def test_split_peg_in_nets_to_zero(alice, bob):
    main, side, _ = pegged(alice, bob, amount=5)
    settle_peg_in(main, side, alice, bob, 2)
    settle_peg_in(main, side, alice, bob, 3)
    assert main.view.balance(alice.address) == 50
    assert side.view.balance(alice.address) == 0
    assert validate_chain(main) and validate_chain(side)


def test_peg_in_guards(alice, bob):
    main, side, _ = pegged(alice, bob)
    with pytest.raises(PegError) as exc:
        debit_tx(alice, side, "main", 0, kind=TxKind.PEG_IN)
    assert exc.value.reason == "zero-amount"
    too_much = debit_tx(alice, side, "main", 11, kind=TxKind.PEG_IN)
    with pytest.raises(PegError) as exc:
        peg_in(side, main, too_much)
    assert exc.value.reason == "insufficient-balance"


def test_credit_cannot_be_redeemed_twice(alice, bob):
    main, side, _ = pegged(alice, bob)
    tx = settle_peg_in(main, side, alice, bob, 4)
    debit = side.view.peg_debits[tx.txid]
    again = peg_credit_tx(debit, "side", "main")
    assert validate_transaction(main, again).reason == "duplicate-peg-credit"


def test_credit_must_wait_for_source_depth(alice, bob):
    main, side, _ = pegged(alice, bob)
    tx = debit_tx(alice, side, "main", 4, kind=TxKind.PEG_IN)
    peg_in(side, main, tx)
    debit = PegDebit(tx.txid, TxKind.PEG_IN, "main", alice.address, alice.address, 4, 1)
    credit = peg_credit_tx(debit, "side", "main")
    assert validate_transaction(main, credit).reason == "unknown-peg-source"
    grow(side, [alice])
    assert validate_transaction(main, credit)
    forged = peg_credit_tx(PegDebit(tx.txid, TxKind.PEG_IN, "main", alice.address, bob.address, 4, 1),
                           "side", "main")
    assert validate_transaction(main, forged).reason == "malformed"
