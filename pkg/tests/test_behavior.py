import pytest

from swarmledger.swarm import Behavior, BehaviorConfig, BehaviorRun, run_scenario
from swarmledger.swarm.behavior import slots_respected

from oracles import balances


def test_leader_mines_every_side_block():
    out, swarm = run_scenario(BehaviorRun(BehaviorConfig()))
    assert out.side_height == 20
    assert out.all_side_blocks_by_leader and set(out.side_miners) == {out.leader}
    assert out.main_slots_respected and out.behavior_consistent and out.supply_ok
    assert sorted(out.switched) == [0, 1, 2, 3]
    behaviors = [r.behavior for r in swarm.robots]
    assert behaviors == [Behavior.LEADER_FOLLOWER] * 4 + [Behavior.DECENTRALIZED] * 2


def test_side_ledger_matches_replay():
    out, swarm = run_scenario(BehaviorRun(BehaviorConfig()))
    leader, followers = swarm.robots[0], swarm.robots[1:4]
    side = swarm.state(leader, "side")
    bal = balances(side.params, side.canonical_blocks())
    assert side.balances == bal
    assert sum(bal.values()) == out.peg_amount
    assert bal[leader.address] == out.peg_amount - 3
    swarm.world.quiesce()  # the newest block may still be in flight
    for f in followers:
        assert swarm.state(f, "side").head == side.head


def test_whole_swarm_switch_freezes_main():
    cfg = BehaviorConfig(robots=4, subset=[0, 1, 2, 3], leader=2)
    out, swarm = run_scenario(BehaviorRun(cfg))
    assert out.all_side_blocks_by_leader
    assert out.main_height == out.main_height_at_switch
    assert all(not swarm.node(r).mining & {"main"} for r in swarm.robots)


def test_main_keeps_growing_when_slots_kept():
    out, swarm = run_scenario(BehaviorRun(BehaviorConfig(keep_main_slots=True)))
    assert out.main_height > out.main_height_at_switch + 10
    assert out.main_slots_respected and out.all_side_blocks_by_leader
    main = swarm.state(swarm.robots[5])
    assert slots_respected(main)


def test_leader_must_be_in_subset():
    with pytest.raises(ValueError, match="leader not in S"):
        BehaviorRun(BehaviorConfig(subset=[1, 2], leader=0))
    with pytest.raises(ValueError):
        BehaviorRun(BehaviorConfig(subset=[0, 0]))
    with pytest.raises(ValueError):
        BehaviorRun(BehaviorConfig(subset=[0, 9]))
