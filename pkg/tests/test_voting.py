from dataclasses import replace

import pytest

from swarmledger.ledger import TxKind, encode_proposal, make_tx, option_address
from swarmledger.swarm import NetConfig, VotingConfig, VotingRun, run_scenario, tally_votes
from swarmledger.swarm.voting import decide

from helpers import grow, keys, make_chain
from oracles import vote_scan


def ballot(window=3):
    ks = [keys(i) for i in range(1, 6)]
    state = make_chain(ks)
    opts = tuple(option_address(ks[0].address, 1, i) for i in range(2))
    prop = make_tx(ks[0], "main", TxKind.VOTE_PROPOSAL, 1, (), encode_proposal(window, opts))
    state.add_transaction(prop)
    grow(state, ks)
    return state, ks, prop, opts


def vote(k, prop, opt, nonce=1):
    return make_tx(k, "main", TxKind.VOTE, nonce, [(opt, 1)], prop.txid)


def test_window_is_inclusive_and_closes():
    state, ks, prop, opts = ballot(window=3)
    assert state.view.proposals[prop.txid].height == 1
    grow(state, ks, 2)
    state.add_transaction(vote(ks[1], prop, opts[0]))
    grow(state, ks)  # height 4 = h0 + W, still inside
    state.add_transaction(vote(ks[2], prop, opts[1]))
    state.add_transaction(vote(ks[3], prop, opts[1]))
    grow(state, ks)  # height 5, outside
    assert state.containing_block(vote(ks[3], prop, opts[1]).txid).height == 5
    assert tally_votes(state, prop.txid) == (1, 0)
    assert vote_scan(state.canonical_blocks(), prop.txid, opts, 3) == (1, 0)


def test_zero_votes_zero_counts():
    state, ks, prop, opts = ballot()
    grow(state, ks, 4)
    assert tally_votes(state, prop.txid) == (0, 0)
    assert decide((0, 0), opts) == (None, False)


def test_tally_of_unknown_proposal():
    state, ks, _, _ = ballot()
    with pytest.raises(LookupError):
        tally_votes(state, b"\x00" * 32)


def test_tie_goes_to_smallest_address():
    addrs = (b"\x09" * 20, b"\x01" * 20, b"\x05" * 20)
    assert decide((2, 2, 1), addrs) == (1, True)
    assert decide((1, 3, 3), addrs) == (1, True)
    assert decide((3, 1, 3), addrs) == (2, True)
    assert decide((4, 3, 3), addrs) == (0, False)


def test_noiseless_five():
    out, _ = run_scenario(VotingRun(VotingConfig(robots=5, error_rate=0.0)))
    assert out.counts == (5, 0) and out.winner == out.truth == 0


def test_two_two_split_of_four():
    out, swarm = run_scenario(VotingRun(VotingConfig(robots=4, forced_votes=[0, 1, 1, 0])))
    p = out.proposal
    blocks = swarm.state(swarm.robots[0]).canonical_blocks()
    assert vote_scan(blocks, p.proposal_txid, p.option_addresses, p.window) == (2, 2)
    assert out.tie and out.winner == p.option_addresses.index(min(p.option_addresses))


def test_majority_vote():
    out, swarm = run_scenario(VotingRun(VotingConfig(forced_votes=[0, 0, 1, 0, None])))
    assert out.counts == (3, 1) and out.winner == 0 and not out.tie
    assert out.votes_cast == 4 and out.reason == "decided"


def test_split_vote_is_flagged():
    out, _ = run_scenario(VotingRun(VotingConfig(forced_votes=[0, 1, 0, 1, None])))
    assert out.counts == (2, 2) and out.tie
    assert out.winner == min((0, 1), key=lambda i: out.proposal.option_addresses[i])


def test_isolated_robots_reach_no_decision():
    out, _ = run_scenario(VotingRun(VotingConfig(isolate=True, max_ticks=300)))
    assert out.no_decision and out.reason == "window-not-closed"


def test_forced_votes_length_checked():
    with pytest.raises(ValueError):
        run_scenario(VotingRun(VotingConfig(forced_votes=[0, 1])))


@pytest.mark.parametrize("seed", range(20))
def test_tally_matches_ledger_scan(seed):
    cfg = VotingConfig(net=NetConfig(seed=seed), robots=9, options=3, error_rate=0.3)
    out, swarm = run_scenario(VotingRun(cfg))
    state = swarm.state(swarm.robots[0])
    p = out.proposal
    assert out.counts == vote_scan(state.canonical_blocks(), p.proposal_txid,
                                   p.option_addresses, p.window)
    assert sum(out.counts) <= cfg.robots


def test_seeded_run_repeats():
    cfg = VotingConfig(net=NetConfig(seed=7), robots=7, error_rate=0.4)
    a, _ = run_scenario(VotingRun(cfg))
    b, _ = run_scenario(VotingRun(replace(cfg)))
    assert a == b
