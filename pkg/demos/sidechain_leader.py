"""Four robots peg tokens onto a single-miner sidechain and follow its leader."""
from swarmledger.swarm import BehaviorConfig, BehaviorRun, run_scenario


def main():
    out, swarm = run_scenario(BehaviorRun(BehaviorConfig(side_blocks=12)))
    print(f"leader {out.leader.hex()[:8]} pegged {out.peg_amount} tokens out of main")
    print(f"robots {out.switched} switched to the sidechain")
    for r in swarm.robots:
        print(f"  robot {r.index}: {r.behavior.value}")
    side = swarm.state(swarm.robots[0], "side")
    print(f"sidechain height {side.height}, every block by the leader: "
          f"{out.all_side_blocks_by_leader}")
    print(f"main chain stalled at height {out.main_height} (a switched robot owns the next slot)")
    print("supply conserved across both chains:", out.supply_ok)


if __name__ == "__main__":
    main()
