import json

from swarmledger.ledger import (
    TxKind,
    dump_chain,
    load_chain,
    make_tx,
    validate_chain,
    validate_dump,
    write_chain,
)

from helpers import grow, keys, make_chain
from oracles import split_dump


def busy_chain(n_blocks=5):
    ks = [keys(1), keys(2), keys(3)]
    state = make_chain(ks, balance=50)
    nonce = 0
    for h in range(n_blocks):
        nonce += 1
        state.add_transaction(make_tx(ks[0], "main", TxKind.TRANSFER, nonce, [(ks[h % 2 + 1].address, 1)]))
        grow(state, ks)
    return state


def test_dump_roundtrip():
    state = busy_chain()
    data = dump_chain(state)
    params, blocks = load_chain(data)
    assert params == state.params
    assert [b.digest for b in blocks] == [b.digest for b in state.canonical_blocks()]
    assert split_dump(data)[1] == blocks
    v = validate_dump(data)
    assert v and v.height == 5


def test_write_chain_files(tmp_path):
    state = busy_chain(3)
    bin_path, jsonl_path = write_chain(state, tmp_path)
    assert bin_path.name == "chain_main.bin"
    rows = [json.loads(line) for line in jsonl_path.read_text().splitlines()]
    assert [r["height"] for r in rows] == [1, 2, 3]
    assert set(rows[0]) == {"height", "digest", "miner", "txs", "timestamp"}
    assert rows[0]["digest"] == state.block_at(1).digest.hex()


def test_every_single_byte_flip_detected():
    data = dump_chain(busy_chain(3))
    for i in range(len(data)):
        bad = bytearray(data)
        bad[i] ^= 0xFF
        assert not validate_dump(bytes(bad)), f"flip at byte {i} went unnoticed"


def test_payload_flip_reports_height():
    state = busy_chain(5)
    data = bytearray(dump_chain(state))
    tx = state.block_at(3).txs[0]
    at = bytes(data).index(tx.encode()) + 30
    data[at] ^= 1
    v = validate_dump(bytes(data))
    assert not v and v.height == 3


def test_truncated_dump_is_decode_failure():
    data = dump_chain(busy_chain(2))
    v = validate_dump(data[:-5])
    assert not v and v.reason == "decode"


def test_validate_chain_on_live_state():
    assert validate_chain(busy_chain(5))
