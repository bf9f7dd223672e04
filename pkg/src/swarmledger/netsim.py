"""Deterministic discrete-event peer-to-peer network.

Time is integer ticks (nominally one second). Every random choice comes
from one seeded ``random.Random`` owned by the event queue, and ties in
delivery time break on insertion order, so a (seed, config) pair fixes
every message, block and metric.
"""
import enum
import heapq
import itertools
import random
from dataclasses import dataclass

from .crypto import KeyPair
from .encoding import Reader, Writer
from .ledger import (
    BlockRejected,
    ChainState,
    Transaction,
    apply_block,
    cross_chain_supply,
    decode_block,
    decode_tx,
    link,
    mine_block,
    root_supply,
)
from .ledger.mining import may_mine


class MsgKind(str, enum.Enum):
    TX = "tx_gossip"
    BLOCK = "block_gossip"
    INV_REQUEST = "inventory_request"
    INV_RESPONSE = "inventory_response"


@dataclass(frozen=True, order=True)
class NodeId:
    index: int
    address: bytes


@dataclass(frozen=True)
class Message:
    kind: MsgKind
    sender: NodeId
    recipient: NodeId
    body: bytes
    send_tick: int
    deliver_tick: int


@dataclass(frozen=True)
class LatencyModel:
    """Per-message delay in ticks: fixed, uniform over [lo, hi], or per link."""

    kind: str = "fixed"
    delay: int = 1
    lo: int = 1
    hi: int = 1
    matrix: tuple | None = None

    def __post_init__(self):
        if self.kind == "fixed":
            if self.delay < 1:
                raise ValueError("fixed delay must be >= 1 tick")
        elif self.kind == "uniform":
            if self.lo < 1 or self.lo > self.hi:
                raise ValueError("uniform latency needs 1 <= lo <= hi")
        elif self.kind == "per_link":
            if self.matrix is None:
                raise ValueError("per_link latency needs a matrix")
            m = tuple(tuple(int(x) for x in row) for row in self.matrix)
            if any(len(row) != len(m) for row in m):
                raise ValueError("latency matrix must be square")
            if any(m[i][j] < 1 for i in range(len(m)) for j in range(len(m)) if i != j):
                raise ValueError("per-link delays must be >= 1 tick")
            object.__setattr__(self, "matrix", m)
        else:
            raise ValueError(f"unknown latency model {self.kind!r}")

    @classmethod
    def fixed(cls, d: int) -> "LatencyModel":
        return cls("fixed", delay=d)

    @classmethod
    def uniform(cls, lo: int, hi: int) -> "LatencyModel":
        return cls("uniform", lo=lo, hi=hi)

    @classmethod
    def per_link(cls, matrix) -> "LatencyModel":
        return cls("per_link", matrix=matrix)

    def draw(self, rng: random.Random, src: int, dst: int) -> int:
        if self.kind == "fixed":
            return self.delay
        if self.kind == "uniform":
            return rng.randint(self.lo, self.hi)
        return self.matrix[src][dst]


class EventQueue:
    """Pending events ordered by (tick, insertion sequence)."""

    def __init__(self, seed: int):
        self.rng = random.Random(seed)
        self._heap = []
        self._seq = itertools.count()
        self.messages = 0

    def push(self, tick: int, item):
        if isinstance(item, Message):
            self.messages += 1
        heapq.heappush(self._heap, (tick, next(self._seq), item))

    def peek_tick(self) -> int | None:
        return self._heap[0][0] if self._heap else None

    def pop(self):
        tick, _, item = heapq.heappop(self._heap)
        if isinstance(item, Message):
            self.messages -= 1
        return tick, item

    def __len__(self):
        return len(self._heap)


class Node:
    def __init__(self, node_id: NodeId, keys: KeyPair):
        self.id = node_id
        self.keys = keys
        self.chains = {}
        self.mining = set()
        self.seen = set()
        self._last_nonce = {}

    @property
    def index(self) -> int:
        return self.id.index

    @property
    def address(self) -> bytes:
        return self.id.address

    def add_chain(self, state: ChainState, mine: bool = True) -> ChainState:
        for other in self.chains.values():
            link(other, state)
        self.chains[state.chain_id] = state
        if mine:
            self.mining.add(state.chain_id)
        return state

    def next_nonce(self, chain_id: str, sender: bytes | None = None) -> int:
        sender = sender or self.address
        key = (chain_id, sender)
        n = max(self.chains[chain_id].view.next_nonce(sender), self._last_nonce.get(key, 0) + 1)
        self._last_nonce[key] = n
        return n

    def __repr__(self):
        return f"Node({self.index})"


def _encode_locator(chain_id: str, digests) -> bytes:
    w = Writer().text(chain_id).count(len(digests))
    for d in digests:
        w.fixed(d, 32)
    return w.getvalue()


def _decode_locator(body: bytes):
    r = Reader(body)
    cid = r.text()
    digests = [r.fixed(32) for _ in range(r.count())]
    r.done()
    return cid, digests


def _encode_blocks(chain_id: str, blocks) -> bytes:
    w = Writer().text(chain_id).count(len(blocks))
    for b in blocks:
        w.blob(b.encode())
    return w.getvalue()


def _decode_blocks(body: bytes):
    r = Reader(body)
    cid = r.text()
    blocks = [decode_block(r.blob()) for _ in range(r.count())]
    r.done()
    return cid, blocks


class World:
    """All nodes, the event queue and the clock of one simulation run."""

    def __init__(self, seed: int = 0, latency: LatencyModel | None = None,
                 record_events: bool = True, check_conservation: bool = True):
        self.seed = seed
        self.latency = latency or LatencyModel.fixed(1)
        self.queue = EventQueue(seed)
        self.rng = self.queue.rng
        self.tick = 0
        self.nodes = []
        self.partitions = []
        self.observers = []
        self.mining_enabled = True
        self._mined_at = None
        self.record_events = record_events
        self.events = []
        self.check_conservation = check_conservation
        self.conservation_violations = []
        self.conservation_checks = 0
        self.dropped = 0
        self.delivered = 0

    # construction

    def add_node(self, keys: KeyPair, chains=(), mine: bool = True) -> Node:
        node = Node(NodeId(len(self.nodes), keys.address), keys)
        for params in chains:
            node.add_chain(ChainState(params), mine=mine)
        self.nodes.append(node)
        return node

    def join(self, keys: KeyPair, chains=(), mine: bool = False) -> Node:
        """Add a node mid-run; it downloads each ledger from its peers."""
        node = self.add_node(keys, chains, mine=mine)
        self.log("join", node=node.index)
        for cid in sorted(node.chains):
            self.request_inventory(node, cid)
        return node

    def log(self, event: str, /, **fields):
        if self.record_events:
            fields["tick"] = self.tick
            fields["type"] = event
            self.events.append(fields)

    # reachability

    def partition(self, groups, from_tick: int, to_tick: int):
        groups = [frozenset(g) for g in groups]
        members = sorted(i for g in groups for i in g)
        if members != list(range(len(self.nodes))):
            raise ValueError("groups must partition the node set")
        if from_tick >= to_tick:
            raise ValueError("partition window must be non-empty")
        for _, a, b in self.partitions:
            if from_tick < b and a < to_tick:
                raise ValueError(f"partition window overlaps [{a}, {b})")
        self.partitions.append((groups, from_tick, to_tick))
        self.schedule(to_tick, lambda world, tick: world._heal())
        return self

    def _heal(self):
        self.log("heal")
        for node in self.nodes:
            for cid in sorted(node.chains):
                self.request_inventory(node, cid)

    def reachable(self, a: int, b: int, tick: int) -> bool:
        for groups, lo, hi in self.partitions:
            if lo <= tick < hi:
                return any(a in g and b in g for g in groups)
        return True

    # messaging

    def send(self, sender: Node, recipient: Node, kind: MsgKind, body: bytes) -> Message | None:
        if not self.reachable(sender.index, recipient.index, self.tick):
            self.dropped += 1
            return None
        delay = self.latency.draw(self.rng, sender.index, recipient.index)
        msg = Message(kind, sender.id, recipient.id, body, self.tick, self.tick + delay)
        self.queue.push(msg.deliver_tick, msg)
        return msg

    def broadcast(self, sender: Node, kind: MsgKind, body: bytes, exclude=()) -> list:
        out = []
        for peer in self.nodes:
            if peer is sender or peer.index in exclude:
                continue
            msg = self.send(sender, peer, kind, body)
            if msg is not None:
                out.append(msg)
        return out

    def submit(self, node: Node, tx: Transaction):
        """Originate ``tx`` at ``node``: local mempool, then gossip."""
        state = node.chains.get(tx.chain_id)
        v = state.add_transaction(tx) if state is not None else None
        if v is not None and not v:
            self.log("tx_rejected", node=node.index, txid=tx.txid.hex(), reason=v.reason)
            return v
        node.seen.add(tx.txid)
        self.log("tx_submit", node=node.index, txid=tx.txid.hex(), chain=tx.chain_id,
                 kind=tx.kind.label)
        self.broadcast(node, MsgKind.TX, tx.encode())
        return v

    def request_inventory(self, node: Node, chain_id: str):
        state = node.chains[chain_id]
        self.broadcast(node, MsgKind.INV_REQUEST, _encode_locator(chain_id, state.canonical))

    def schedule(self, tick: int, fn):
        """Run ``fn(world, tick)`` at ``tick``."""
        self.queue.push(max(tick, self.tick), fn)

    # event handling

    def _deliver(self, msg: Message):
        node = self.nodes[msg.recipient.index]
        self.delivered += 1
        self.log("deliver", kind=msg.kind.value, src=msg.sender.index, dst=node.index,
                 sent=msg.send_tick, size=len(msg.body))
        if msg.kind == MsgKind.TX:
            self._on_tx(node, msg)
        elif msg.kind == MsgKind.BLOCK:
            self._on_block(node, msg)
        elif msg.kind == MsgKind.INV_REQUEST:
            self._on_inv_request(node, msg)
        else:
            self._on_inv_response(node, msg)

    def _on_tx(self, node, msg):
        tx = decode_tx(msg.body)
        if tx.txid in node.seen:
            return
        node.seen.add(tx.txid)
        state = node.chains.get(tx.chain_id)
        if state is not None and not state.add_transaction(tx):
            return
        self.broadcast(node, MsgKind.TX, msg.body, exclude=(msg.sender.index,))

    def _on_block(self, node, msg):
        block = decode_block(msg.body)
        if block.digest in node.seen:
            return
        node.seen.add(block.digest)
        state = node.chains.get(block.header.chain_id)
        if state is not None:
            if not self._apply(node, state, block):
                return
        self.broadcast(node, MsgKind.BLOCK, msg.body, exclude=(msg.sender.index,))

    def _apply(self, node, state, block) -> bool:
        try:
            res = apply_block(state, block, now=self.tick)
        except BlockRejected as exc:
            self.log("block_rejected", node=node.index, chain=state.chain_id,
                     block=block.digest.hex(), reason=exc.reason)
            return False
        if res.status == "pending":
            self.request_inventory(node, state.chain_id)
        for d in res.orphaned:
            self.log("orphaned", node=node.index, chain=state.chain_id, block=d.hex())
        if res.head_changed:
            self._check_supply(node)
        return True

    def _on_inv_request(self, node, msg):
        cid, locator = _decode_locator(msg.body)
        state = node.chains.get(cid)
        if state is None:
            return
        fork = 0
        for d in reversed(locator):
            if state.is_canonical(d):
                fork = state.blocks[d].height
                break
        blocks = [state.block_at(h) for h in range(fork + 1, state.height + 1)]
        if blocks:
            self.send(node, self.nodes[msg.sender.index], MsgKind.INV_RESPONSE,
                      _encode_blocks(cid, blocks))

    def _on_inv_response(self, node, msg):
        cid, blocks = _decode_blocks(msg.body)
        state = node.chains.get(cid)
        if state is None:
            return
        for block in blocks:
            node.seen.add(block.digest)
            if block.digest not in state.blocks:
                self._apply(node, state, block)

    def _check_supply(self, node):
        if not self.check_conservation:
            return
        self.conservation_checks += 1
        total = cross_chain_supply(node.chains)
        expected = root_supply(node.chains)
        if total != expected:
            self.conservation_violations.append(
                {"tick": self.tick, "node": node.index, "total": total, "expected": expected}
            )

    def _mine(self, tick):
        chain_ids = sorted({cid for n in self.nodes for cid in n.mining})
        for cid in chain_ids:
            for node in self.nodes:
                if cid not in node.mining:
                    continue
                state = node.chains[cid]
                if not may_mine(state, tick, node.address):
                    continue
                block = mine_block(state, tick, node.keys)
                if block is None:
                    continue
                node.seen.add(block.digest)
                self.log("block_mined", node=node.index, chain=cid, block=block.digest.hex(),
                         height=block.height, txs=len(block.txs))
                if self._apply(node, state, block):
                    self.broadcast(node, MsgKind.BLOCK, block.encode())

    def _next_mining_tick(self) -> int | None:
        if not self.mining_enabled:
            return None
        best = None
        for node in self.nodes:
            for cid in node.mining:
                iv = node.chains[cid].params.block_interval
                t = (self.tick // iv + 1) * iv
                if best is None or t < best:
                    best = t
        return best

    def _process(self, tick: int):
        while self.queue.peek_tick() is not None and self.queue.peek_tick() <= tick:
            _, item = self.queue.pop()
            if isinstance(item, Message):
                self._deliver(item)
            else:
                item(self, tick)
        if self.mining_enabled and tick != self._mined_at:
            self._mined_at = tick
            self._mine(tick)
        for obs in list(self.observers):
            obs(self, tick)

    def step(self, until_tick: int) -> "World":
        """Process every event and mining opportunity up to ``until_tick``."""
        if until_tick < self.tick:
            raise ValueError("cannot step backwards")
        while True:
            candidates = [t for t in (self.queue.peek_tick(), self._next_mining_tick())
                          if t is not None]
            nxt = min(candidates) if candidates else None
            if nxt is None or nxt > until_tick:
                break
            self.tick = max(nxt, self.tick)
            self._process(self.tick)
        self.tick = until_tick
        return self

    def quiesce(self, idle_intervals: int = 2, limit: int = 10**7) -> "World":
        """Stop mining and drain all in-flight messages."""
        self.mining_enabled = False
        while self.queue.messages and self.tick < limit:
            self.step(self.queue.peek_tick())
        interval = max((s.params.block_interval for n in self.nodes for s in n.chains.values()),
                       default=1)
        self.step(self.tick + idle_intervals * interval)
        return self

    def heads(self, chain_id: str) -> list:
        return [n.chains[chain_id].head for n in self.nodes if chain_id in n.chains]

    def converged(self, chain_id: str) -> bool:
        return len(set(self.heads(chain_id))) <= 1

    def settle(self, chain_id: str, max_tick: int) -> "World":
        """Keep mining until every node agrees on the head, then quiesce."""
        interval = next(n.chains[chain_id].params.block_interval
                        for n in self.nodes if chain_id in n.chains)
        while self.tick < max_tick:
            self.step(min(self.tick + interval, max_tick))
            if not self.queue.messages and self.converged(chain_id):
                break
        return self.quiesce()


def broadcast(world: World, sender: Node, kind: MsgKind, body: bytes) -> list:
    return world.broadcast(sender, kind, body)


def step(world: World, until_tick: int) -> World:
    return world.step(until_tick)


def partition(world: World, groups, from_tick: int, to_tick: int) -> World:
    return world.partition(groups, from_tick, to_tick)
