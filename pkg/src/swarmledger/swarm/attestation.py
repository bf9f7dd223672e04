"""Proof of discovery: a document's digest timestamped on the ledger."""
from dataclasses import dataclass, field

from .. import crypto
from ..ledger import ChainState, TxKind, Verdict
from ..ledger.types import fail
from .core import NetConfig, Robot, Role, Swarm, build_swarm, run_scenario


@dataclass(frozen=True)
class DiscoveryRecord:
    document: bytes = field(repr=False)
    doc_hash: bytes
    attestation_txid: bytes
    timestamp: int | None = None
    height: int | None = None
    attester: bytes = b""

    def __post_init__(self):
        if crypto.hash(self.document) != self.doc_hash:
            raise ValueError("doc_hash must be the digest of the document")


def submit_discovery(swarm: Swarm, robot: Robot, document: bytes) -> DiscoveryRecord:
    """Send the attestation; timestamp and height stay empty until it is confirmed."""
    if not document:
        raise ValueError("empty document")
    digest = crypto.hash(document)
    tx = swarm.submit(robot, TxKind.ATTESTATION, (), digest)
    swarm.world.log("attestation", robot=robot.index, txid=tx.txid.hex())
    return DiscoveryRecord(document, digest, tx.txid, attester=robot.address)


def confirm_discovery(state: ChainState, record: DiscoveryRecord) -> DiscoveryRecord | None:
    block = state.containing_block(record.attestation_txid)
    if block is None:
        return None
    return DiscoveryRecord(record.document, record.doc_hash, record.attestation_txid,
                           block.header.timestamp, block.height, record.attester)


def register_discovery(swarm: Swarm, robot: Robot, document: bytes, confirmations: int | None = None,
                       max_ticks: int = 10**6) -> DiscoveryRecord:
    """Attest ``document`` from ``robot`` and run the world until it is confirmed."""
    record = submit_discovery(swarm, robot, document)
    need = swarm.params.confirmation_depth if confirmations is None else confirmations
    state = swarm.state(robot)
    ok = swarm.run_until(lambda: state.confirmations(record.attestation_txid) >= need,
                         swarm.world.tick + max_ticks)
    if not ok:
        raise TimeoutError("attestation was not confirmed")
    return confirm_discovery(state, record)


def verify_discovery(state: ChainState, document: bytes, record: DiscoveryRecord) -> Verdict:
    """Truthy iff the document hashes to the payload of the canonical attestation."""
    tx = state.find_tx(record.attestation_txid)
    if tx is None:
        return fail("not-canonical", record.attestation_txid.hex())
    if tx.kind != TxKind.ATTESTATION:
        return fail("malformed", "not an attestation")
    if crypto.hash(document) != tx.payload:
        return fail("hash-mismatch")
    return Verdict(True, height=state.view.tx_heights[tx.txid])


def priority(state: ChainState, records) -> list:
    """Canonical records ordered by (block height, position in block); others dropped."""
    keyed = []
    for rec in records:
        block = state.containing_block(rec.attestation_txid)
        if block is None:
            continue
        pos = next(i for i, tx in enumerate(block.txs) if tx.txid == rec.attestation_txid)
        keyed.append(((block.height, pos), rec))
    return [rec for _, rec in sorted(keyed, key=lambda kv: kv[0])]


@dataclass
class AttestationConfig:
    net: NetConfig = field(default_factory=NetConfig)
    robots: int = 3
    document_size: int = 1 << 16
    racers: list = field(default_factory=lambda: [1, 2])  # robots attesting the same document
    race_gap: int = 15  # ticks between the two submissions
    max_ticks: int = 2000


@dataclass
class AttestationOutcome:
    records: list
    winner: bytes | None
    verified: bool
    mutated_rejected: bool
    reasons: dict


class AttestationRun:
    def __init__(self, config: AttestationConfig):
        if not config.racers:
            raise ValueError("need at least one attesting robot")
        self.config = config
        self.pending = []
        self.outcome = None

    def roles(self):
        return [Role.UUV] * self.config.robots

    def build(self) -> Swarm:
        return build_swarm(self.config.net, self.roles())

    def setup(self, swarm: Swarm):
        self.swarm = swarm
        self.document = swarm.rng.randbytes(self.config.document_size)
        for i, idx in enumerate(self.config.racers):
            robot = swarm.robots[idx]

            def attest(world, tick, robot=robot):
                self.pending.append(submit_discovery(swarm, robot, self.document))

            swarm.world.schedule(1 + i * self.config.race_gap, attest)
        swarm.world.observers.append(self.observe)

    def observe(self, world, tick):
        if self.outcome is not None or len(self.pending) < len(self.config.racers):
            return
        state = self.swarm.state(self.swarm.robots[0])
        need = self.swarm.params.confirmation_depth
        if all(state.confirmations(r.attestation_txid) >= need for r in self.pending):
            self.outcome = self.finish(state)

    def finish(self, state) -> AttestationOutcome:
        records = [confirm_discovery(state, r) or r for r in self.pending]
        ranked = priority(state, records)
        first = ranked[0] if ranked else records[0]
        mutated = bytearray(self.document)
        mutated[0] ^= 1
        good = verify_discovery(state, self.document, first)
        bad = verify_discovery(state, bytes(mutated), first)
        return AttestationOutcome(
            records=records,
            winner=ranked[0].attester if ranked else None,
            verified=bool(good),
            mutated_rejected=not bad,
            reasons={"original": good.reason or "ok", "mutated": bad.reason or "ok"},
        )

    @property
    def done(self) -> bool:
        return self.outcome is not None

    def result(self) -> AttestationOutcome:
        if self.outcome is None:
            self.outcome = self.finish(self.swarm.state(self.swarm.robots[0]))
        return self.outcome


def run_attestation(config: AttestationConfig | None = None) -> AttestationOutcome:
    outcome, _ = run_scenario(AttestationRun(config or AttestationConfig()))
    return outcome
