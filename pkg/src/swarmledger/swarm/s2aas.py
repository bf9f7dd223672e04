"""Sensing-as-a-service: sensor data sold for tokens, delivered through an off-chain blob.

Steps, as logged in the outcome:
  1 sensors register (data tx: position and price)
  2 requester queries the registry (a scan of its own ledger copy)
  3 requester has the listing
  4 requester pays the chosen sensor
  5 sensor sees the payment at confirmation depth
  6 sensor posts a data tx sealed to the requester: blob link and content hash
  7 requester decrypts, fetches the blob and checks its hash
"""
from dataclasses import dataclass, field

from .. import crypto
from ..encoding import DecodeError, Reader, Writer
from ..ledger import TxKind
from .core import BlobStore, NetConfig, Role, Swarm, build_swarm, run_scenario

REGISTER_TAG = b"S2REG"
DATA_TAG = b"S2DAT"
LINK_PREFIX = b"blob:"


@dataclass(frozen=True)
class Listing:
    address: bytes
    position: tuple
    price: int
    pubkey: bytes
    height: int


def encode_registration(position, price: int) -> bytes:
    x, y = position
    return Writer().raw(REGISTER_TAG).u32(x).u32(y).u64(price).getvalue()


def decode_registration(payload: bytes) -> tuple:
    if not payload.startswith(REGISTER_TAG):
        raise DecodeError("not a registration")
    r = Reader(payload[len(REGISTER_TAG):])
    pos = (r.u32(), r.u32())
    price = r.u64()
    r.done()
    return pos, price


def encode_delivery(payment_txid: bytes, sealed: bytes) -> bytes:
    return Writer().raw(DATA_TAG).fixed(payment_txid, 32).raw(sealed).getvalue()


def decode_delivery(payload: bytes) -> tuple:
    if not payload.startswith(DATA_TAG) or len(payload) < len(DATA_TAG) + 32:
        raise DecodeError("not a delivery")
    body = payload[len(DATA_TAG):]
    return body[:32], body[32:]


def seal_pointer(requester_pub: bytes, blob_name: str, content_hash: bytes, entropy=None) -> bytes:
    link = LINK_PREFIX + blob_name.encode()
    return crypto.encrypt_for(requester_pub, Writer().blob(link).fixed(content_hash, 32).getvalue(),
                              entropy)


def open_pointer(private: bytes, sealed: bytes) -> tuple:
    r = Reader(crypto.decrypt(private, sealed))
    link = r.blob()
    digest = r.fixed(32)
    r.done()
    if not link.startswith(LINK_PREFIX):
        raise DecodeError("bad blob link")
    return link[len(LINK_PREFIX):].decode(), digest


def scan_registry(state) -> list:
    """Every sensor registration on the canonical chain, latest per address."""
    found = {}
    for block in state.canonical_blocks():
        for tx in block.txs:
            if tx.kind != TxKind.DATA:
                continue
            try:
                pos, price = decode_registration(tx.payload)
            except DecodeError:
                continue
            signer = next(s.signer for s in tx.signatures
                          if crypto.derive_address(s.signer) == tx.sender)
            found[tx.sender] = Listing(tx.sender, pos, price, signer, block.height)
    return [found[a] for a in sorted(found)]


@dataclass
class S2aaSConfig:
    net: NetConfig = field(default_factory=NetConfig)
    prices: list = field(default_factory=lambda: [3])  # one sensor per price
    choose: int = 0  # index into the sensor list
    payment: int | None = None  # defaults to the chosen sensor's price
    bystanders: int = 1  # extra robots that never take part
    blob_size: int = 4096
    run_dir: str | None = None
    wait_blocks: int = 5  # how long an unserved requester keeps waiting
    max_ticks: int = 3000


@dataclass
class ExchangeOutcome:
    success: bool
    steps: dict
    listings: list
    chosen: bytes | None
    price: int | None
    paid: int | None
    underpaid: bool
    payment_txid: bytes | None
    data_txid: bytes | None
    blob_name: str | None
    hash_ok: bool
    requester_debited: int
    reason: str = ""


class S2aaSRun:
    def __init__(self, config: S2aaSConfig):
        if not config.prices:
            raise ValueError("need at least one sensor")
        self.config = config
        self.steps = {}
        self.listings = []
        self.payment = None
        self.served = set()  # payment txids a sensor has already answered
        self.delivery = None
        self.blob_name = None
        self.outcome = None
        self.store = BlobStore(config.run_dir)

    def roles(self):
        cfg = self.config
        return [Role.UTV] + [Role.SENSOR] * len(cfg.prices) + [Role.UAV] * cfg.bystanders

    def build(self) -> Swarm:
        cfg = self.config
        prices = [0] + list(cfg.prices) + [0] * cfg.bystanders
        return build_swarm(cfg.net, self.roles(), prices=prices)

    def setup(self, swarm: Swarm):
        self.swarm = swarm
        self.requester = swarm.robots[0]
        self.sensors = [r for r in swarm.robots if r.role is Role.SENSOR]

        def register(world, tick):
            for s in self.sensors:
                self.swarm.submit(s, TxKind.DATA, (), encode_registration(s.position, s.data_price))
            self.mark(1, tick)

        swarm.world.schedule(1, register)
        swarm.world.observers.append(self.observe)

    def mark(self, step: int, tick: int):
        if step not in self.steps:
            self.steps[step] = tick
            self.swarm.world.log("s2aas_step", step=step)

    def observe(self, world, tick):
        if self.outcome is not None or 1 not in self.steps:
            return
        cfg = self.config
        req_state = self.swarm.state(self.requester)
        k = self.swarm.params.confirmation_depth
        if self.payment is None:
            self.mark(2, tick)
            listings = [l for l in scan_registry(req_state) if req_state.height - l.height + 1 >= k]
            if len(listings) < len(self.sensors):
                return
            self.listings = listings
            self.mark(3, tick)
            chosen = self.sensors[cfg.choose]
            amount = cfg.payment if cfg.payment is not None else chosen.data_price
            self.payment = self.swarm.submit(self.requester, TxKind.TRANSFER,
                                             [(chosen.address, amount)])
            self.mark(4, tick)
            return
        chosen = self.sensors[cfg.choose]
        sensor_state = self.swarm.state(chosen)
        if self.payment.txid not in self.served and sensor_state.confirmations(self.payment.txid) >= k:
            self.mark(5, tick)
            self.served.add(self.payment.txid)
            paid = self.payment.outputs[0][1]
            if paid >= chosen.data_price:
                self.deliver(chosen, sensor_state, tick)
        if self.delivery is not None and req_state.confirmations(self.delivery.txid) >= 1:
            self.outcome = self.finish(req_state, tick)
        elif 5 in self.steps and self.delivery is None:
            waited = req_state.height - (req_state.view.tx_heights.get(self.payment.txid) or 0)
            if waited >= cfg.wait_blocks + k:
                self.outcome = self.finish(req_state, tick)

    def deliver(self, sensor, state, tick):
        pay_tx = state.find_tx(self.payment.txid)
        requester_pub = next(s.signer for s in pay_tx.signatures
                             if crypto.derive_address(s.signer) == pay_tx.sender)
        reading = self.swarm.rng.randbytes(self.config.blob_size)
        self.blob_name = self.store.put(reading)
        sealed = seal_pointer(requester_pub, self.blob_name, crypto.hash(reading), self.swarm.entropy())
        self.delivery = self.swarm.submit(sensor, TxKind.DATA, (),
                                          encode_delivery(self.payment.txid, sealed))
        self.mark(6, tick)

    def finish(self, state, tick) -> ExchangeOutcome:
        cfg = self.config
        chosen = self.sensors[cfg.choose]
        hash_ok = False
        if self.delivery is not None:
            tx = state.find_tx(self.delivery.txid)
            _, sealed = decode_delivery(tx.payload)
            name, digest = open_pointer(self.requester.keys.private, sealed)
            blob = self.store.get(name)
            hash_ok = crypto.hash(blob) == digest
            if hash_ok:
                self.mark(7, tick)
        paid = self.payment.outputs[0][1] if self.payment else None
        underpaid = paid is not None and paid < chosen.data_price
        genesis = dict(state.params.genesis_allocation)[self.requester.address]
        return ExchangeOutcome(
            success=hash_ok and 7 in self.steps,
            steps=dict(sorted(self.steps.items())),
            listings=list(self.listings),
            chosen=chosen.address,
            price=chosen.data_price,
            paid=paid,
            underpaid=underpaid,
            payment_txid=self.payment.txid if self.payment else None,
            data_txid=self.delivery.txid if self.delivery else None,
            blob_name=self.blob_name,
            hash_ok=hash_ok,
            requester_debited=genesis - state.view.balance(self.requester.address),
            reason="served" if hash_ok else ("underpaid" if underpaid else "no-delivery"),
        )

    @property
    def done(self) -> bool:
        return self.outcome is not None

    def result(self) -> ExchangeOutcome:
        if self.outcome is None:
            self.outcome = self.finish(self.swarm.state(self.requester), self.swarm.world.tick)
            self.outcome.reason = self.outcome.reason if self.outcome.success else "timeout"
        return self.outcome


def run_s2aas(config: S2aaSConfig | None = None) -> ExchangeOutcome:
    outcome, _ = run_scenario(S2aaSRun(config or S2aaSConfig()))
    return outcome
