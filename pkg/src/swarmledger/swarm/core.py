"""Robots, swarm construction, the off-chain blob store and background load."""
import enum
import random
from dataclasses import dataclass, field
from pathlib import Path

from .. import crypto
from ..crypto import KeyPair
from ..encoding import Writer
from ..ledger import (
    ChainParams,
    PowPolicy,
    RoundRobinPolicy,
    SingleMinerPolicy,
    TxKind,
    make_tx,
)
from ..netsim import LatencyModel, Node, NodeId, World


class Role(str, enum.Enum):
    UTV = "UTV"
    UAV = "UAV"
    UUV = "UUV"
    SENSOR = "sensor"


class Behavior(str, enum.Enum):
    DECENTRALIZED = "decentralized"
    LEADER_FOLLOWER = "leader_follower"


@dataclass
class Robot:
    node: NodeId
    keys: KeyPair
    role: Role
    position: tuple = (0, 0)
    battery: float = 1.0
    behavior: Behavior = Behavior.DECENTRALIZED
    data_price: int = 0

    def __post_init__(self):
        if not 0.0 <= self.battery <= 1.0:
            raise ValueError("battery must lie in [0, 1]")

    @property
    def address(self) -> bytes:
        return self.keys.address

    @property
    def index(self) -> int:
        return self.node.index


@dataclass
class NetConfig:
    """Network and main-chain settings shared by every scenario."""

    seed: int = 0
    block_interval: int = 10
    max_tx_per_block: int = 100
    confirmation_depth: int = 1
    latency: LatencyModel = field(default_factory=lambda: LatencyModel.fixed(2))
    policy: str = "round_robin"  # round_robin | single_miner | pow
    pow_probability: float = 1 / 64
    pow_attempts: int = 4
    genesis_balance: int = 100
    chain_id: str = "main"
    record_events: bool = True


def robot_seed(seed: int, index: int) -> bytes:
    return crypto.hash(Writer().raw(b"swarmledger/robot").u64(seed).u32(index).getvalue())


def mining_policy(net: NetConfig, addresses):
    if net.policy == "round_robin":
        return RoundRobinPolicy(tuple(addresses))
    if net.policy == "single_miner":
        return SingleMinerPolicy(addresses[0])
    if net.policy == "pow":
        return PowPolicy.from_probability(net.pow_probability, net.pow_attempts)
    raise ValueError(f"unknown mining policy {net.policy!r}")


class Swarm:
    """A world plus the robots living on its nodes."""

    def __init__(self, world: World, robots: list, params: ChainParams, rng: random.Random):
        self.world = world
        self.robots = robots
        self.params = params
        self.rng = rng

    @property
    def chain_id(self) -> str:
        return self.params.chain_id

    def node(self, robot: Robot) -> Node:
        return self.world.nodes[robot.index]

    def state(self, robot: Robot, chain_id: str | None = None):
        return self.node(robot).chains.get(chain_id or self.chain_id)

    def submit(self, robot: Robot, kind: TxKind, outputs=(), payload=b"",
               chain_id: str | None = None):
        chain_id = chain_id or self.chain_id
        node = self.node(robot)
        tx = make_tx(robot.keys, chain_id, kind, node.next_nonce(chain_id), outputs, payload)
        self.world.submit(node, tx)
        return tx

    def entropy(self) -> bytes:
        return self.rng.getrandbits(256).to_bytes(32, "big")

    def run_until(self, predicate, max_tick: int):
        interval = self.params.block_interval
        while self.world.tick < max_tick and not predicate():
            self.world.step(min(self.world.tick + interval, max_tick))
        return predicate()


def build_swarm(net: NetConfig, roles, batteries=None, prices=None) -> Swarm:
    roles = [Role(r) for r in roles]
    keys = [crypto.generate_keypair(robot_seed(net.seed, i)) for i in range(len(roles))]
    addresses = [k.address for k in keys]
    params = ChainParams(
        chain_id=net.chain_id,
        mining_policy=mining_policy(net, addresses),
        block_interval=net.block_interval,
        max_tx_per_block=net.max_tx_per_block,
        confirmation_depth=net.confirmation_depth,
        genesis_allocation=tuple((a, net.genesis_balance) for a in addresses),
    )
    world = World(seed=net.seed, latency=net.latency, record_events=net.record_events)
    # scenario draws use their own stream so they never shift latency draws
    rng = random.Random(crypto.hash(b"scenario" + net.seed.to_bytes(8, "big")))
    robots = []
    for i, (role, kp) in enumerate(zip(roles, keys)):
        node = world.add_node(kp, [params])
        robots.append(Robot(
            node=node.id,
            keys=kp,
            role=role,
            position=(rng.randrange(100), rng.randrange(100)),
            battery=batteries[i] if batteries else 1.0,
            data_price=prices[i] if prices else 0,
        ))
    return Swarm(world, robots, params, rng)


class BlobStore:
    """Content-addressed off-chain storage, optionally mirrored to ``<dir>/blobs``."""

    def __init__(self, run_dir=None):
        self._mem = {}
        self.root = Path(run_dir) / "blobs" if run_dir is not None else None

    def put(self, data: bytes) -> str:
        name = crypto.hash(data).hex()
        self._mem[name] = bytes(data)
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
            (self.root / name).write_bytes(data)
        return name

    def get(self, name: str) -> bytes:
        if name in self._mem:
            return self._mem[name]
        if self.root is not None and (self.root / name).exists():
            return (self.root / name).read_bytes()
        raise KeyError(name)

    def names(self) -> list:
        return sorted(self._mem)


def install_load(swarm: Swarm, every: int, count: int, start: int = 1, stop: int | None = None,
                 senders=None, chain_id: str | None = None):
    """Schedule ``count`` one-token transfers every ``every`` ticks, cycling senders."""
    senders = list(senders if senders is not None else swarm.robots)
    chain_id = chain_id or swarm.chain_id
    cursor = [0]

    def fire(world, tick):
        for _ in range(count):
            i = cursor[0] % len(senders)
            cursor[0] += 1
            src = senders[i]
            dst = senders[(i + 1) % len(senders)]
            swarm.submit(src, TxKind.TRANSFER, [(dst.address, 1)], chain_id=chain_id)
        nxt = tick + every
        if stop is None or nxt < stop:
            world.schedule(nxt, fire)

    swarm.world.schedule(start, fire)


def run_scenario(run, swarm: Swarm | None = None, max_ticks: int | None = None):
    """Build (unless given), set up and drive a scenario run to completion."""
    swarm = swarm or run.build()
    run.setup(swarm)
    swarm.run_until(lambda: run.done, max_ticks or run.config.max_ticks)
    return run.result(), swarm
