"""Run configuration: JSON in, validated dataclasses out.

Every field has a default, so ``{}`` is a valid config (a load-only run of
five robots). Validation collects every problem before raising.
"""
import json
from dataclasses import asdict, dataclass, field, fields

from .netsim import LatencyModel
from .swarm import (
    AssistConfig,
    AssistRun,
    AttestationConfig,
    AttestationRun,
    BehaviorConfig,
    BehaviorRun,
    NetConfig,
    ResponderPolicy,
    S2aaSConfig,
    S2aaSRun,
    VotingConfig,
    VotingRun,
)

SCENARIOS = {
    "voting": (VotingConfig, VotingRun),
    "assist": (AssistConfig, AssistRun),
    "behavior_switch": (BehaviorConfig, BehaviorRun),
    "s2aas": (S2aaSConfig, S2aaSRun),
    "attestation": (AttestationConfig, AttestationRun),
}
# scenarios whose robot count comes from the roster
ROSTER_SIZED = ("voting", "behavior_switch", "attestation")
ROLES = ("UTV", "UAV", "UUV", "sensor")
POLICIES = ("round_robin", "single_miner", "pow")


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid config:\n  " + "\n  ".join(self.errors))


@dataclass
class ChainConfig:
    block_interval: int = 10
    max_tx_per_block: int = 100
    confirmation_depth: int = 1
    policy: str = "round_robin"
    pow_probability: float = 1 / 64
    pow_attempts: int = 4


@dataclass
class RosterConfig:
    count: int = 5
    roles: list | None = None  # defaults to all UTV
    genesis_balance: int = 100


@dataclass
class LoadConfig:
    every: int = 0  # 0 turns background load off
    count: int = 1
    start: int = 1
    stop: int | None = None  # defaults to the run duration


@dataclass
class RunConfig:
    seed: int = 0
    duration: int = 1000
    scenario: str | None = None
    chain: ChainConfig = field(default_factory=ChainConfig)
    latency: dict = field(default_factory=lambda: {"kind": "fixed", "delay": 2})
    roster: RosterConfig = field(default_factory=RosterConfig)
    load: LoadConfig = field(default_factory=LoadConfig)
    partitions: list = field(default_factory=list)  # [{"groups": [[0, 1], [2]], "from": a, "to": b}]
    params: dict = field(default_factory=dict)
    throughput_window: int = 10  # blocks per throughput window
    settle: bool = True  # drain messages after the run

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def name(self) -> str:
        return self.scenario or "load"

    def latency_model(self) -> LatencyModel:
        lat = dict(self.latency)
        kind = lat.pop("kind", "fixed")
        return LatencyModel(kind, **lat)

    def net(self) -> NetConfig:
        c = self.chain
        return NetConfig(
            seed=self.seed,
            block_interval=c.block_interval,
            max_tx_per_block=c.max_tx_per_block,
            confirmation_depth=c.confirmation_depth,
            latency=self.latency_model(),
            policy=c.policy,
            pow_probability=c.pow_probability,
            pow_attempts=c.pow_attempts,
            genesis_balance=self.roster.genesis_balance,
        )

    def scenario_config(self, run_dir=None):
        if self.scenario is None:
            return None
        cls, _ = SCENARIOS[self.scenario]
        kw = dict(self.params)
        if self.scenario in ROSTER_SIZED:
            kw.setdefault("robots", self.roster.count)
        if self.scenario == "assist" and isinstance(kw.get("policy"), dict):
            kw["policy"] = ResponderPolicy(**kw["policy"])
        if self.scenario == "s2aas":
            kw["run_dir"] = None if run_dir is None else str(run_dir)
        return cls(net=self.net(), **kw)

    def scenario_run(self, run_dir=None):
        if self.scenario is None:
            return None
        _, run_cls = SCENARIOS[self.scenario]
        return run_cls(self.scenario_config(run_dir))

    def node_count(self) -> int:
        if self.scenario == "assist":
            return 1 + len(self.params.get("responders", AssistConfig().responders))
        if self.scenario == "s2aas":
            d = S2aaSConfig()
            return (1 + len(self.params.get("prices", d.prices))
                    + self.params.get("bystanders", d.bystanders))
        if self.scenario in ROSTER_SIZED:
            return self.params.get("robots", self.roster.count)
        return self.roster.count


def _sub(cls, data, where, errors):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        errors.append(f"{where}: expected an object")
        return cls()
    names = {f.name for f in fields(cls)}
    for key in sorted(set(data) - names):
        errors.append(f"{where}.{key}: unknown field")
    return cls(**{k: v for k, v in data.items() if k in names})


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def from_dict(data: dict) -> RunConfig:
    errors = []
    if not isinstance(data, dict):
        raise ConfigError(["top level: expected a JSON object"])
    top = {f.name for f in fields(RunConfig)}
    for key in sorted(set(data) - top):
        errors.append(f"{key}: unknown field")
    cfg = RunConfig(
        seed=data.get("seed", 0),
        duration=data.get("duration", 1000),
        scenario=data.get("scenario"),
        chain=_sub(ChainConfig, data.get("chain"), "chain", errors),
        latency=data.get("latency", {"kind": "fixed", "delay": 2}),
        roster=_sub(RosterConfig, data.get("roster"), "roster", errors),
        load=_sub(LoadConfig, data.get("load"), "load", errors),
        partitions=data.get("partitions", []),
        params=data.get("params", {}),
        throughput_window=data.get("throughput_window", 10),
        settle=data.get("settle", True),
    )
    errors.extend(validate(cfg))
    if errors:
        raise ConfigError(errors)
    return cfg


def validate(cfg: RunConfig) -> list:
    errors = []
    if not _is_int(cfg.seed) or not 0 <= cfg.seed < 2 ** 64:
        errors.append("seed: must be an unsigned 64-bit integer")
    c = cfg.chain
    for name in ("block_interval", "max_tx_per_block", "confirmation_depth", "pow_attempts"):
        v = getattr(c, name)
        if not _is_int(v) or v < 1:
            errors.append(f"chain.{name}: must be a positive integer")
    if c.policy not in POLICIES:
        errors.append(f"chain.policy: {c.policy!r} is not one of {', '.join(POLICIES)}")
    if not isinstance(c.pow_probability, (int, float)) or not 0 < c.pow_probability <= 1:
        errors.append("chain.pow_probability: must lie in (0, 1]")
    if not _is_int(cfg.duration):
        errors.append("duration: must be an integer number of ticks")
    elif _is_int(c.block_interval) and cfg.duration < 2 * c.block_interval:
        errors.append(f"duration: must be >= 2 x block_interval ({cfg.duration} < "
                      f"{2 * c.block_interval})")
    if cfg.scenario is not None and cfg.scenario not in SCENARIOS:
        errors.append(f"scenario: unknown scenario {cfg.scenario!r}; valid scenarios are "
                      + ", ".join(SCENARIOS))
    try:
        if not isinstance(cfg.latency, dict):
            raise ValueError("expected an object")
        cfg.latency_model()
    except (TypeError, ValueError) as exc:
        errors.append(f"latency: {exc}")
    r = cfg.roster
    if not _is_int(r.count) or r.count < 1:
        errors.append("roster.count: must be a positive integer")
    if not _is_int(r.genesis_balance) or r.genesis_balance < 1:
        errors.append("roster.genesis_balance: must be a positive integer")
    if r.roles is not None:
        if not isinstance(r.roles, list) or len(r.roles) != r.count:
            errors.append("roster.roles: needs exactly one role per robot")
        elif any(role not in ROLES for role in r.roles):
            errors.append(f"roster.roles: roles must be among {', '.join(ROLES)}")
    ld = cfg.load
    if not _is_int(ld.every) or ld.every < 0:
        errors.append("load.every: must be a non-negative integer")
    if not _is_int(ld.count) or ld.count < 1:
        errors.append("load.count: must be a positive integer")
    if not _is_int(ld.start) or ld.start < 0:
        errors.append("load.start: must be a non-negative integer")
    if not _is_int(cfg.throughput_window) or cfg.throughput_window < 1:
        errors.append("throughput_window: must be a positive integer")
    if not isinstance(cfg.params, dict):
        errors.append("params: expected an object")
    elif cfg.scenario in SCENARIOS:
        errors.extend(_validate_params(cfg))
    elif cfg.params:
        errors.append("params: only meaningful together with a scenario")
    if not errors:
        errors.extend(_validate_partitions(cfg))
    return errors


def _validate_params(cfg: RunConfig) -> list:
    errors = []
    cls, run_cls = SCENARIOS[cfg.scenario]
    allowed = {f.name for f in fields(cls)} - {"net", "run_dir"}
    for key in sorted(set(cfg.params) - allowed):
        errors.append(f"params.{key}: unknown parameter for scenario {cfg.scenario!r}")
    if errors:
        return errors
    try:
        run_cls(cfg.scenario_config())
    except (TypeError, ValueError) as exc:
        return [f"params: {exc}"]
    n = cfg.node_count()
    p = cfg.params

    def index_ok(name, i):
        if not _is_int(i) or not 0 <= i < n:
            errors.append(f"params.{name}: robot {i!r} is not in the roster of {n}")

    if cfg.scenario == "behavior_switch":
        for i in p.get("subset", BehaviorConfig().subset):
            index_ok("subset", i)
    if cfg.scenario == "attestation":
        for i in p.get("racers", AttestationConfig().racers):
            index_ok("racers", i)
    if cfg.scenario == "s2aas":
        choose = p.get("choose", 0)
        if not _is_int(choose) or not 0 <= choose < len(p.get("prices", S2aaSConfig().prices)):
            errors.append(f"params.choose: no sensor {choose!r}")
    if cfg.scenario == "voting" and p.get("options", 2) < 2:
        errors.append("params.options: a ballot needs at least two options")
    if cfg.scenario == "voting" and "forced_votes" in p and len(p["forced_votes"]) != n:
        errors.append("params.forced_votes: needs one entry per robot")
    return errors


def _validate_partitions(cfg: RunConfig) -> list:
    errors = []
    n = cfg.node_count()
    windows = []
    for i, part in enumerate(cfg.partitions):
        if not isinstance(part, dict) or set(part) != {"groups", "from", "to"}:
            errors.append(f"partitions[{i}]: needs exactly groups, from, to")
            continue
        members = sorted(j for g in part["groups"] for j in g)
        if members != list(range(n)):
            errors.append(f"partitions[{i}].groups: must cover nodes 0..{n - 1} exactly once")
        a, b = part["from"], part["to"]
        if not (_is_int(a) and _is_int(b)) or a >= b:
            errors.append(f"partitions[{i}]: window must satisfy from < to")
            continue
        for a2, b2 in windows:
            if a < b2 and a2 < b:
                errors.append(f"partitions[{i}]: window overlaps [{a2}, {b2})")
        windows.append((a, b))
    return errors


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None
    return from_dict(data)
