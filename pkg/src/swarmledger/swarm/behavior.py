"""Behavior differentiation: a subset of robots moves onto a single-miner sidechain.

The robots' control law does not change; only the chain they mine and
validate on does. Under a single-miner policy the sidechain turns into a
leader-follower scheme.
"""
from dataclasses import dataclass, field

from ..ledger import (
    ChainParams,
    PegError,
    RoundRobinPolicy,
    SingleMinerPolicy,
    TxKind,
    create_sidechain,
    debit_tx,
)
from .core import Behavior, NetConfig, Role, Swarm, build_swarm, run_scenario


@dataclass
class BehaviorConfig:
    net: NetConfig = field(default_factory=NetConfig)
    robots: int = 6
    subset: list = field(default_factory=lambda: [0, 1, 2, 3])
    leader: int = 0
    peg_amount: int = 20
    side_chain_id: str = "side"
    side_blocks: int = 20
    side_transfers: int = 3
    keep_main_slots: bool = False  # S members keep mining their main-chain slots
    max_ticks: int = 5000


@dataclass
class BehaviorOutcome:
    side_height: int
    side_miners: list
    leader: bytes
    all_side_blocks_by_leader: bool
    main_slots_respected: bool
    behavior_consistent: bool
    main_height_at_switch: int | None
    main_height: int
    switched: list
    peg_txid: bytes | None
    peg_amount: int
    supply_ok: bool


def side_params(config: BehaviorConfig, leader_address: bytes, main: ChainParams) -> ChainParams:
    return ChainParams(
        chain_id=config.side_chain_id,
        mining_policy=SingleMinerPolicy(leader_address),
        block_interval=main.block_interval,
        max_tx_per_block=main.max_tx_per_block,
        confirmation_depth=main.confirmation_depth,
    )


def slots_respected(state) -> bool:
    policy = state.params.mining_policy
    if not isinstance(policy, RoundRobinPolicy):
        return True
    return all(b.header.miner == policy.slot(b.height) for b in state.canonical_blocks())


class BehaviorRun:
    def __init__(self, config: BehaviorConfig):
        if config.leader not in config.subset:
            raise ValueError("leader not in S")
        if len(set(config.subset)) != len(config.subset) or not all(
                0 <= i < config.robots for i in config.subset):
            raise ValueError("subset must name distinct robots")
        self.config = config
        self.peg = None
        self.switched = []
        self.main_height_at_switch = None
        self.transfers_sent = 0
        self.outcome = None

    def roles(self):
        return [Role.UTV] * self.config.robots

    def build(self) -> Swarm:
        return build_swarm(self.config.net, self.roles())

    def setup(self, swarm: Swarm):
        self.swarm = swarm
        cfg = self.config
        self.leader = swarm.robots[cfg.leader]
        self.members = [swarm.robots[i] for i in cfg.subset]
        self.params = side_params(cfg, self.leader.address, swarm.params)

        def start(world, tick):
            node = swarm.node(self.leader)
            main = node.chains[swarm.chain_id]
            self.peg = debit_tx(self.leader.keys, main, cfg.side_chain_id, cfg.peg_amount,
                                nonce=node.next_nonce(swarm.chain_id))
            world.submit(node, self.peg)
            world.log("peg_out", txid=self.peg.txid.hex(), amount=cfg.peg_amount)

        swarm.world.schedule(1, start)
        swarm.world.observers.append(self.observe)

    def observe(self, world, tick):
        if self.peg is None or self.outcome is not None:
            return
        cfg = self.config
        for robot in self.members:
            if robot.behavior is Behavior.LEADER_FOLLOWER:
                continue
            node = self.swarm.node(robot)
            main = node.chains[self.swarm.chain_id]
            try:
                side = create_sidechain(main, self.params, self.peg)
            except PegError:
                continue
            node.add_chain(side, mine=True)
            if not cfg.keep_main_slots:
                node.mining.discard(self.swarm.chain_id)
            robot.behavior = Behavior.LEADER_FOLLOWER
            self.switched.append(robot.index)
            if self.main_height_at_switch is None:
                self.main_height_at_switch = main.height
            world.log("behavior_switch", robot=robot.index, chain=cfg.side_chain_id)
        if len(self.switched) < len(self.members):
            return
        side = self.swarm.state(self.leader, cfg.side_chain_id)
        followers = [r for r in self.members if r is not self.leader]
        if followers and self.transfers_sent < cfg.side_transfers and side.height >= 1:
            dst = followers[self.transfers_sent % len(followers)]
            self.swarm.submit(self.leader, TxKind.TRANSFER, [(dst.address, 1)],
                              chain_id=cfg.side_chain_id)
            self.transfers_sent += 1
        if side.height >= cfg.side_blocks:
            self.outcome = self.finish()

    def finish(self) -> BehaviorOutcome:
        cfg = self.config
        side = self.swarm.state(self.leader, cfg.side_chain_id)
        main = self.swarm.state(self.swarm.robots[0])
        miners = [b.header.miner for b in side.canonical_blocks()]
        consistent = True
        for robot in self.swarm.robots:
            node = self.swarm.node(robot)
            on_side = cfg.side_chain_id in node.mining
            if on_side != (robot.behavior is Behavior.LEADER_FOLLOWER):
                consistent = False
        all_main_ok = all(slots_respected(self.swarm.node(r).chains[self.swarm.chain_id])
                          for r in self.swarm.robots)
        return BehaviorOutcome(
            side_height=side.height,
            side_miners=miners,
            leader=self.leader.address,
            all_side_blocks_by_leader=bool(miners) and all(m == self.leader.address for m in miners),
            main_slots_respected=all_main_ok,
            behavior_consistent=consistent,
            main_height_at_switch=self.main_height_at_switch,
            main_height=main.height,
            switched=list(self.switched),
            peg_txid=self.peg.txid if self.peg else None,
            peg_amount=cfg.peg_amount,
            supply_ok=not self.swarm.world.conservation_violations,
        )

    @property
    def done(self) -> bool:
        return self.outcome is not None

    def result(self) -> BehaviorOutcome:
        if self.outcome is None:
            if len(self.switched) == len(self.members):
                self.outcome = self.finish()
            else:
                main = self.swarm.state(self.swarm.robots[0])
                self.outcome = BehaviorOutcome(
                    0, [], self.leader.address, False, slots_respected(main), True,
                    self.main_height_at_switch, main.height, list(self.switched),
                    self.peg.txid if self.peg else None, self.config.peg_amount,
                    not self.swarm.world.conservation_violations,
                )
        return self.outcome


def run_behavior_switch(config: BehaviorConfig | None = None) -> BehaviorOutcome:
    outcome, _ = run_scenario(BehaviorRun(config or BehaviorConfig()))
    return outcome
