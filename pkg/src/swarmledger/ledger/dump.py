"""Chain dumps: length-prefixed canonical records plus a JSON-lines sidecar.

The first record is the encoded ChainParams (it fixes the genesis digest);
every following record is one canonical block, height 1 upward.
"""
import json
from pathlib import Path

from ..encoding import DecodeError, Reader, Writer
from .chain import ChainState, validate_blocks
from .types import ChainParams, Verdict, decode_block


def dump_chain(state: ChainState) -> bytes:
    w = Writer().blob(state.params.encode())
    for block in state.canonical_blocks():
        w.blob(block.encode())
    return w.getvalue()


def load_chain(data: bytes) -> tuple[ChainParams, list]:
    r = Reader(data)
    params = ChainParams.decode(r.blob())
    blocks = []
    while r.remaining:
        blocks.append(decode_block(r.blob()))
    return params, blocks


def validate_dump(data: bytes, links=None) -> Verdict:
    r = Reader(data)
    pos = 0
    try:
        params = ChainParams.decode(r.blob())
        blocks = []
        while r.remaining:
            pos += 1
            blocks.append(decode_block(r.blob()))
    except DecodeError as exc:
        return Verdict(False, "decode", str(exc), pos)
    return validate_blocks(params, blocks, links)


def block_summaries(state: ChainState) -> list:
    return [
        {
            "height": b.height,
            "digest": b.digest.hex(),
            "miner": b.header.miner.hex(),
            "txs": len(b.txs),
            "timestamp": b.header.timestamp,
        }
        for b in state.canonical_blocks()
    ]


def write_chain(state: ChainState, run_dir) -> tuple[Path, Path]:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    bin_path = run_dir / f"chain_{state.chain_id}.bin"
    jsonl_path = run_dir / f"chain_{state.chain_id}.jsonl"
    bin_path.write_bytes(dump_chain(state))
    with open(jsonl_path, "w", encoding="utf-8") as fh:
        for row in block_summaries(state):
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return bin_path, jsonl_path
