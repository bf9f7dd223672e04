import pytest
from hypothesis import given, strategies as st

from swarmledger import crypto
from swarmledger.ledger import decode_claim
from swarmledger.netsim import NodeId
from swarmledger.swarm import (
    AssistCall,
    AssistConfig,
    AssistRun,
    Decision,
    ResponderPolicy,
    Robot,
    Role,
    responder_policy,
    run_scenario,
)
from swarmledger.swarm.assist import decode_location, encode_location

from helpers import keys
from oracles import balances


def robot(battery, role=Role.UAV):
    k = keys(4)
    return Robot(NodeId(1, k.address), k, role, battery=battery)


def call(escrow):
    return AssistCall(b"\x01" * 20, crypto.MultisigSpec(1, [keys(1).public]), escrow)


def test_policy_examples():
    assert responder_policy(robot(0.9), call(5)) is Decision.ACCEPT
    assert responder_policy(robot(0.9), call(2)) is Decision.DECLINE
    assert responder_policy(robot(0.3), call(1)) is Decision.ACCEPT  # low battery, cheap job
    assert responder_policy(robot(0.1), call(100)) is Decision.DECLINE  # cannot move


def test_escrow_must_be_positive():
    with pytest.raises(ValueError):
        call(0)


def test_low_battery_takes_cheaper_jobs():
    assert responder_policy(robot(0.3), call(2)) is Decision.ACCEPT
    assert responder_policy(robot(1.0), call(2)) is Decision.DECLINE


@given(st.floats(0, 1), st.floats(0, 1), st.integers(1, 20))
def test_policy_monotonicity(b1, b2, escrow):
    lo, hi = sorted((b1, b2))
    p = ResponderPolicy()
    assert p.price_for(lo) <= p.price_for(hi)
    r = robot(b1)
    if responder_policy(r, call(escrow)) is Decision.ACCEPT:
        assert responder_policy(r, call(escrow + 1)) is Decision.ACCEPT


@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_location_roundtrip(x, y):
    assert decode_location(encode_location((x, y))) == (x, y)


def test_two_responders_single_spend():
    out, swarm = run_scenario(AssistRun(AssistConfig()))
    assert out.responder in (1, 2) and out.location_ok and not out.refunded
    assert out.decisions == {1: "accept", 2: "accept"}
    assert [reason for _, reason in out.rejected] == ["bad-nonce"]
    state = swarm.state(swarm.robots[0])
    bal = balances(state.params, state.canonical_blocks())
    winner = swarm.robots[out.responder]
    assert bal[winner.address] == 100 + out.escrow
    spec_addr = next(iter(state.view.escrows))
    assert spec_addr not in bal  # escrow drained exactly once
    assert state.balances == bal


def test_third_key_cannot_read_location():
    out, swarm = run_scenario(AssistRun(AssistConfig()))
    state = swarm.state(swarm.robots[0])
    _, sealed = decode_claim(state.find_tx(out.claim_txid).payload)
    loser = swarm.robots[3 - out.responder]
    with pytest.raises(crypto.DecryptionError):
        crypto.decrypt(loser.keys.private, sealed)
    with pytest.raises(crypto.DecryptionError):
        crypto.decrypt(swarm.robots[0].keys.private, sealed)


def test_single_uav():
    out, _ = run_scenario(AssistRun(AssistConfig(responders=[["UAV", 0.8]])))
    assert out.responder == 1 and out.responder_role == "UAV" and out.location_ok
    assert out.ticks_to_claim > 0


def test_no_taker_refunds_caller():
    cfg = AssistConfig(responders=[["UAV", 0.1], ["UUV", 0.9]], escrow=2)
    out, swarm = run_scenario(AssistRun(cfg))
    assert out.no_responder and out.refunded
    assert out.decisions == {1: "decline", 2: "decline"}
    assert swarm.state(swarm.robots[0]).balances[swarm.robots[0].address] == 100


def test_needs_a_mobile_responder():
    with pytest.raises(ValueError):
        run_scenario(AssistRun(AssistConfig(responders=[["sensor", 0.9]])))
