"""Run metrics read off the canonical chain and the event log."""
import dataclasses
import enum
import math
import statistics

from .netsim import World


def jsonable(obj):
    """Plain JSON values: bytes as hex, enums by value, dataclasses as dicts."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if f.repr}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bytes, bytearray)):
        return obj.hex()
    if isinstance(obj, dict):
        return {str(jsonable(k)): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def submit_ticks(events) -> dict:
    """First gossip tick per txid (hex)."""
    out = {}
    for ev in events:
        if ev["type"] == "tx_submit":
            out.setdefault(ev["txid"], ev["tick"])
    return out


def confirmation_latencies(state, submitted: dict, k: int) -> list:
    """(txid hex, ticks) for each submitted tx that reached depth ``k``.

    A tx in block h is confirmed once block h + k - 1 exists; its latency is
    that block's timestamp minus the submit tick.
    """
    out = []
    for block in state.canonical_blocks():
        conf_height = block.height + k - 1
        if conf_height > state.height:
            break
        when = state.block_at(conf_height).header.timestamp
        for tx in block.txs:
            t0 = submitted.get(tx.txid.hex())
            if t0 is not None:
                out.append((tx.txid.hex(), when - t0))
    return out


def throughput_windows(state, window: int) -> list:
    """Canonical tx counts per run of ``window`` consecutive heights."""
    counts = []
    for block in state.canonical_blocks():
        i = (block.height - 1) // window
        while len(counts) <= i:
            counts.append(0)
        counts[i] += len(block.txs)
    return counts


def summarize(samples) -> dict:
    if not samples:
        return {"count": 0, "mean": None, "median": None, "p95": None}
    s = sorted(samples)
    return {
        "count": len(s),
        "mean": statistics.fmean(s),
        "median": statistics.median(s),
        "p95": s[math.ceil(0.95 * len(s)) - 1],
    }


def orphans(world: World, chain_id: str, observer: int = 0) -> tuple:
    state = world.nodes[observer].chains[chain_id]
    known = {}
    for node in world.nodes:
        st = node.chains.get(chain_id)
        if st is not None:
            known.update(st.blocks)
    # blocks above the observer's tip may just be in flight, not abandoned
    known = [d for d, b in known.items() if 0 < b.height <= state.height]
    produced = len(known)
    count = sum(1 for d in known if not state.is_canonical(d))
    return count, (count / produced if produced else 0.0)


def compute(world: World, chain_id: str, k: int, window: int, observer: int = 0) -> dict:
    state = world.nodes[observer].chains[chain_id]
    lat = confirmation_latencies(state, submit_ticks(world.events), k)
    counts = throughput_windows(state, window)
    interval = state.params.block_interval
    total = sum(counts)
    span = state.head_block.header.timestamp
    n_orphans, rate = orphans(world, chain_id, observer)
    return {
        "chain": {
            "id": chain_id,
            "height": state.height,
            "head": state.head.hex(),
            "canonical_txs": total,
            "converged": world.converged(chain_id),
        },
        "latency": {"k": k, "samples": [t for _, t in lat], **summarize([t for _, t in lat])},
        "throughput": {
            "overall": total / span if span else 0.0,
            "window_blocks": window,
            "window_counts": counts,
            "per_window": [c / (window * interval) for c in counts],
            "ceiling": state.params.max_tx_per_block / interval,
        },
        "orphans": {"count": n_orphans, "rate": rate},
        "ledger_bytes": [sum(st.size_bytes() for st in n.chains.values()) for n in world.nodes],
        "conservation": {
            "checks": world.conservation_checks,
            "violations": len(world.conservation_violations),
        },
        "messages": {"delivered": world.delivered, "dropped": world.dropped},
    }
