"""Assistance calls: escrow locked in an m-of-n multisig, claimed by a responder."""
import enum
from dataclasses import dataclass, field

from .. import crypto
from ..crypto import MultisigSpec
from ..encoding import Reader, Writer
from ..ledger import ESCROW_TIMEOUT, Transaction, TxKind, encode_claim, decode_claim
from ..ledger.chain import validate_transaction
from .core import NetConfig, Role, Robot, Swarm, build_swarm, run_scenario


class Decision(str, enum.Enum):
    ACCEPT = "accept"
    DECLINE = "decline"


@dataclass(frozen=True)
class ResponderPolicy:
    motion_threshold: float = 0.2  # below this a robot cannot move at all
    price_threshold: int = 3
    low_battery: float = 0.5
    low_battery_price: int = 1  # robots short on charge take cheaper jobs

    def price_for(self, battery: float) -> int:
        if battery < self.low_battery:
            return min(self.low_battery_price, self.price_threshold)
        return self.price_threshold


@dataclass
class AssistCall:
    caller: bytes
    multisig: MultisigSpec
    escrow: int
    encrypted_location: bytes = b""
    call_txid: bytes = b""
    templates: dict = field(default_factory=dict)  # responder address -> claim missing its signature

    def __post_init__(self):
        if self.escrow < 1:
            raise ValueError("escrow must be at least 1")


def responder_policy(robot: Robot, call: AssistCall, policy: ResponderPolicy | None = None) -> Decision:
    policy = policy or ResponderPolicy()
    if robot.battery < policy.motion_threshold:
        return Decision.DECLINE
    if call.escrow < policy.price_for(robot.battery):
        return Decision.DECLINE
    return Decision.ACCEPT


def encode_location(position) -> bytes:
    x, y = position
    return Writer().u32(x).u32(y).getvalue()


def decode_location(data: bytes) -> tuple:
    r = Reader(data)
    pos = (r.u32(), r.u32())
    r.done()
    return pos


def open_call(swarm: Swarm, caller: Robot, responders, escrow: int, location) -> AssistCall:
    """Lock ``escrow`` at a 2-of-(1+len(responders)) address and pre-sign one claim per responder."""
    spec = MultisigSpec(2, [caller.keys.public] + [r.keys.public for r in responders])
    call_tx = swarm.submit(caller, TxKind.MULTISIG_CALL, [(spec.address, escrow)], spec.encode())
    plain = encode_location(location)
    call = AssistCall(caller.address, spec, escrow, call_txid=call_tx.txid)
    for r in responders:
        sealed = crypto.encrypt_for(r.keys.public, plain, swarm.entropy())
        claim = Transaction(swarm.chain_id, TxKind.MULTISIG_CLAIM, spec.address, 1,
                            ((r.address, escrow),), encode_claim(spec, sealed))
        call.templates[r.address] = claim.signed(caller.keys.private)
        if not call.encrypted_location:
            call.encrypted_location = sealed
    return call


def refund_tx(call: AssistCall, caller: Robot, chain_id: str, nonce: int = 1) -> Transaction:
    """The caller's lone-signature reclaim, valid once the escrow has timed out."""
    tx = Transaction(chain_id, TxKind.MULTISIG_CLAIM, call.multisig.address, nonce,
                     ((call.caller, call.escrow),), encode_claim(call.multisig))
    return tx.signed(caller.keys.private)


@dataclass
class AssistConfig:
    net: NetConfig = field(default_factory=NetConfig)
    responders: list = field(default_factory=lambda: [["UAV", 0.9], ["UUV", 0.9]])  # [role, battery]
    caller_battery: float = 0.3
    escrow: int = 5
    policy: ResponderPolicy = field(default_factory=ResponderPolicy)
    max_ticks: int = 3000


@dataclass
class AssistOutcome:
    responder: int | None
    responder_role: str | None
    claim_txid: bytes | None
    call_tick: int | None
    claim_tick: int | None
    location_ok: bool
    refunded: bool
    decisions: dict
    rejected: list
    escrow: int

    @property
    def ticks_to_claim(self) -> int | None:
        if self.claim_tick is None or self.call_tick is None:
            return None
        return self.claim_tick - self.call_tick

    @property
    def no_responder(self) -> bool:
        return self.responder is None


class AssistRun:
    def __init__(self, config: AssistConfig):
        self.config = config
        self.call = None
        self.call_tick = None
        self.decisions = {}
        self.claims = {}  # responder index -> signed claim
        self.refund = None
        self.outcome = None

    def roles(self):
        return [Role.UTV] + [Role(r) for r, _ in self.config.responders]

    def build(self) -> Swarm:
        cfg = self.config
        batteries = [cfg.caller_battery] + [b for _, b in cfg.responders]
        return build_swarm(cfg.net, self.roles(), batteries=batteries)

    def setup(self, swarm: Swarm):
        self.swarm = swarm
        roles = {Role.UAV, Role.UUV}
        caller = swarm.robots[0]
        candidates = [r for r in swarm.robots[1:] if r.role in roles]
        if not candidates:
            raise ValueError("an assist call needs at least one UAV or UUV responder")
        self.candidates = candidates

        def start(world, tick):
            self.call = open_call(swarm, caller, candidates, self.config.escrow, caller.position)
            self.call_tick = tick
            world.log("assist_call", multisig=self.call.multisig.address.hex(),
                      escrow=self.call.escrow)

        swarm.world.schedule(1, start)
        swarm.world.observers.append(self.observe)

    def observe(self, world, tick):
        if self.call is None or self.outcome is not None:
            return
        for robot in self.candidates:
            if robot.index in self.decisions:
                continue
            state = self.swarm.state(robot)
            if state.confirmations(self.call.call_txid) < 1:
                continue
            decision = responder_policy(robot, self.call, self.config.policy)
            self.decisions[robot.index] = decision
            world.log("assist_decision", robot=robot.index, decision=decision.value)
            if decision is Decision.ACCEPT:
                claim = self.call.templates[robot.address].signed(robot.keys.private)
                self.claims[robot.index] = claim
                world.submit(self.swarm.node(robot), claim)
        caller = self.swarm.robots[0]
        state = self.swarm.state(caller)
        for idx, claim in self.claims.items():
            if state.confirmations(claim.txid) >= 1:
                self.outcome = self.finish(state, tick, idx, claim)
                return
        if self.refund is not None:
            if state.confirmations(self.refund.txid) >= 1:
                self.outcome = self.finish(state, tick, None, None)
            return
        opened = state.view.escrows.get(self.call.multisig.address)
        if opened is not None and state.height + 1 >= opened.height + ESCROW_TIMEOUT:
            if state.view.next_nonce(self.call.multisig.address) == 1:
                self.refund = refund_tx(self.call, caller, self.swarm.chain_id)
                world.log("assist_refund", txid=self.refund.txid.hex())
                world.submit(self.swarm.node(caller), self.refund)

    def finish(self, state, tick, idx, claim) -> AssistOutcome:
        rejected = []
        for other, tx in sorted(self.claims.items()):
            if tx is claim:
                continue
            v = validate_transaction(state, tx)
            rejected.append((other, v.reason))
        location_ok = False
        if claim is not None:
            robot = self.swarm.robots[idx]
            _, sealed = decode_claim(state.find_tx(claim.txid).payload)
            location_ok = decode_location(crypto.decrypt(robot.keys.private, sealed)) == \
                self.swarm.robots[0].position
        return AssistOutcome(
            responder=idx,
            responder_role=self.swarm.robots[idx].role.value if idx is not None else None,
            claim_txid=claim.txid if claim is not None else None,
            call_tick=self.call_tick,
            claim_tick=tick if claim is not None else None,
            location_ok=location_ok,
            refunded=claim is None,
            decisions={k: v.value for k, v in sorted(self.decisions.items())},
            rejected=rejected,
            escrow=self.config.escrow,
        )

    @property
    def done(self) -> bool:
        return self.outcome is not None

    def result(self) -> AssistOutcome:
        if self.outcome is None:
            self.outcome = AssistOutcome(None, None, None, self.call_tick, None, False, False,
                                         {k: v.value for k, v in sorted(self.decisions.items())},
                                         [], self.config.escrow)
        return self.outcome


def run_assist(config: AssistConfig | None = None) -> AssistOutcome:
    outcome, _ = run_scenario(AssistRun(config or AssistConfig()))
    return outcome
