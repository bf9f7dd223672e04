import pytest

from swarmledger import crypto
from swarmledger.ledger import TxKind
from swarmledger.swarm import S2aaSConfig, S2aaSRun, run_scenario
from swarmledger.swarm.s2aas import (
    decode_delivery,
    decode_registration,
    encode_registration,
    open_pointer,
    scan_registry,
    seal_pointer,
)

from helpers import keys
from oracles import balances, sha256


def test_registration_roundtrip():
    payload = encode_registration((12, 7), 3)
    assert decode_registration(payload) == ((12, 7), 3)
    with pytest.raises(ValueError):
        decode_registration(b"S2DAT" + payload[5:])


def test_pointer_sealed_to_requester_only():
    req, other = keys(1), keys(2)
    digest = sha256(b"reading")
    sealed = seal_pointer(req.public, "ab12", digest, b"\x07" * 32)
    assert open_pointer(req.private, sealed) == ("ab12", digest)
    with pytest.raises(crypto.DecryptionError):
        open_pointer(other.private, sealed)


def test_full_exchange(tmp_path):
    out, swarm = run_scenario(S2aaSRun(S2aaSConfig(run_dir=str(tmp_path))))
    assert out.success and out.reason == "served" and out.hash_ok
    assert sorted(out.steps) == list(range(1, 8))
    ticks = [out.steps[i] for i in range(1, 8)]
    assert ticks == sorted(ticks)
    blob = (tmp_path / "blobs" / out.blob_name).read_bytes()
    assert len(blob) == 4096
    state = swarm.state(swarm.robots[0])
    _, sealed = decode_delivery(state.find_tx(out.data_txid).payload)
    assert open_pointer(swarm.robots[0].keys.private, sealed) == (out.blob_name, sha256(blob))
    for robot in swarm.robots[1:]:
        with pytest.raises(crypto.DecryptionError):
            open_pointer(robot.keys.private, sealed)
    assert out.requester_debited == out.price == 3
    bal = balances(state.params, state.canonical_blocks())
    assert bal[out.chosen] == 100 + out.price


def test_registry_lists_every_sensor():
    cfg = S2aaSConfig(prices=[5, 2, 9], choose=1)
    out, swarm = run_scenario(S2aaSRun(cfg))
    assert out.success and out.price == 2
    listings = scan_registry(swarm.state(swarm.robots[0]))
    assert sorted(l.price for l in listings) == [2, 5, 9]
    for l in listings:
        assert crypto.derive_address(l.pubkey) == l.address


def test_underpayment_gets_no_data():
    out, swarm = run_scenario(S2aaSRun(S2aaSConfig(prices=[3], payment=2)))
    assert not out.success and out.underpaid and out.reason == "underpaid"
    assert out.data_txid is None and 6 not in out.steps
    assert out.requester_debited == 2
    state = swarm.state(swarm.robots[0])
    data = [tx for b in state.canonical_blocks() for tx in b.txs if tx.kind == TxKind.DATA]
    assert len(data) == 1  # the registration only


def test_needs_a_sensor():
    with pytest.raises(ValueError):
        S2aaSRun(S2aaSConfig(prices=[]))
