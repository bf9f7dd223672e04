"""Token voting: a proposal mints fresh option addresses, robots vote with one token."""
from dataclasses import dataclass, field

from ..ledger import ChainState, TxKind, decode_proposal, encode_proposal, make_tx, option_address
from ..ledger.accounts import replay
from .core import NetConfig, Role, Swarm, build_swarm, run_scenario


@dataclass(frozen=True)
class VoteProposal:
    proposal_txid: bytes
    option_addresses: tuple
    proposer: bytes
    window: int


@dataclass
class VotingConfig:
    net: NetConfig = field(default_factory=NetConfig)
    robots: int = 5
    options: int = 2
    truth: int = 0
    error_rate: float = 0.1
    window: int = 5
    forced_votes: list | None = None  # option index per robot, or None to abstain
    isolate: bool = False  # cut every robot off from every other
    max_ticks: int = 2000


@dataclass
class VoteOutcome:
    counts: tuple
    winner: int | None
    tie: bool
    truth: int
    proposal: VoteProposal | None = None
    inclusion_height: int | None = None
    votes_cast: int = 0
    decided_tick: int | None = None
    reason: str = ""

    @property
    def no_decision(self) -> bool:
        return self.winner is None

    @property
    def correct(self) -> bool:
        return self.winner == self.truth


def propose(swarm: Swarm, robot, options: int, window: int) -> VoteProposal:
    node = swarm.node(robot)
    nonce = node.next_nonce(swarm.chain_id)
    addrs = tuple(option_address(robot.address, nonce, i) for i in range(options))
    tx = make_tx(robot.keys, swarm.chain_id, TxKind.VOTE_PROPOSAL, nonce, (),
                 encode_proposal(window, addrs))
    swarm.world.submit(node, tx)
    return VoteProposal(tx.txid, addrs, robot.address, window)


def proposal_height(state: ChainState, proposal_txid: bytes) -> int | None:
    rec = state.view.proposals.get(proposal_txid)
    return rec.height if rec is not None else None


def tally_votes(state: ChainState, proposal: VoteProposal | bytes) -> tuple:
    """Tokens received by each option address within the voting window.

    Option addresses can only be credited by votes, so the tally is the
    balance change of each option between the proposal block and the
    close of the window.
    """
    txid = proposal.proposal_txid if isinstance(proposal, VoteProposal) else proposal
    tx = state.find_tx(txid)
    if tx is None or tx.kind != TxKind.VOTE_PROPOSAL:
        raise LookupError("proposal is not on the canonical chain")
    window, options = decode_proposal(tx.payload)
    h0 = proposal_height(state, txid)
    end = min(h0 + window, state.height)
    blocks = state.canonical_blocks()
    before = replay(state.params, blocks[:h0 - 1])
    after = replay(state.params, blocks[:end])
    return tuple(after.balance(a) - before.balance(a) for a in options)


def decide(counts, addresses) -> tuple:
    """(winner, tie): the most-voted option; ties go to the smallest option address."""
    if not counts or max(counts) == 0:
        return None, False
    top = max(counts)
    leaders = [i for i, c in enumerate(counts) if c == top]
    return min(leaders, key=lambda i: addresses[i]), len(leaders) > 1


class VotingRun:
    def __init__(self, config: VotingConfig):
        self.config = config
        self.proposal = None
        self.voted = set()
        self.outcome = None
        self.choices = []

    def roles(self):
        return [Role.UTV] * self.config.robots

    def build(self) -> Swarm:
        return build_swarm(self.config.net, self.roles())

    def setup(self, swarm: Swarm):
        cfg = self.config
        self.swarm = swarm
        if cfg.forced_votes is not None:
            if len(cfg.forced_votes) != len(swarm.robots):
                raise ValueError("forced_votes needs one entry per robot")
            self.choices = list(cfg.forced_votes)
        else:
            # each robot observes the truth, wrong with probability error_rate
            for _ in swarm.robots:
                if swarm.rng.random() < cfg.error_rate:
                    wrong = [o for o in range(cfg.options) if o != cfg.truth]
                    self.choices.append(swarm.rng.choice(wrong))
                else:
                    self.choices.append(cfg.truth)
        if cfg.isolate:
            swarm.world.partition([[r.index] for r in swarm.robots], 0, 10**12)

        def start(world, tick):
            self.proposal = propose(swarm, swarm.robots[0], cfg.options, cfg.window)
            world.log("vote_proposal", txid=self.proposal.proposal_txid.hex(),
                      options=[a.hex() for a in self.proposal.option_addresses])

        swarm.world.schedule(1, start)
        swarm.world.observers.append(self.observe)

    def observe(self, world, tick):
        if self.proposal is None or self.outcome is not None:
            return
        txid = self.proposal.proposal_txid
        for robot in self.swarm.robots:
            if robot.index in self.voted:
                continue
            state = self.swarm.state(robot)
            if proposal_height(state, txid) is None:
                continue
            self.voted.add(robot.index)
            choice = self.choices[robot.index]
            if choice is None:
                continue
            self.swarm.submit(robot, TxKind.VOTE,
                              [(self.proposal.option_addresses[choice], 1)], txid)
            world.log("vote", robot=robot.index, option=choice)
        state = self.swarm.state(self.swarm.robots[0])
        h0 = proposal_height(state, txid)
        if h0 is not None and state.height >= h0 + self.proposal.window:
            self.outcome = self.finish(state, tick)

    def finish(self, state, tick) -> VoteOutcome:
        counts = tally_votes(state, self.proposal)
        winner, tie = decide(counts, self.proposal.option_addresses)
        return VoteOutcome(
            counts=counts, winner=winner, tie=tie, truth=self.config.truth,
            proposal=self.proposal, inclusion_height=proposal_height(state, self.proposal.proposal_txid),
            votes_cast=sum(counts), decided_tick=tick,
            reason="tie" if tie else ("decided" if winner is not None else "no-votes"),
        )

    @property
    def done(self) -> bool:
        return self.outcome is not None

    def result(self) -> VoteOutcome:
        if self.outcome is None:
            state = self.swarm.state(self.swarm.robots[0])
            counts = (0,) * self.config.options
            if self.proposal is not None and proposal_height(state, self.proposal.proposal_txid):
                counts = tally_votes(state, self.proposal)
            # the window never closed: no decision, whatever trickled in
            self.outcome = VoteOutcome(
                counts=counts, winner=None, tie=False, truth=self.config.truth,
                proposal=self.proposal, votes_cast=sum(counts), reason="window-not-closed",
            )
        return self.outcome


def run_voting(config: VotingConfig | None = None) -> VoteOutcome:
    outcome, _ = run_scenario(VotingRun(config or VotingConfig()))
    return outcome
