"""A stranded ground robot pays whichever drone or sub comes to help."""
from swarmledger.swarm import AssistConfig, AssistRun, NetConfig, run_scenario


def main():
    cfg = AssistConfig(net=NetConfig(seed=2), responders=[["UAV", 0.9], ["UUV", 0.4]], escrow=4)
    out, swarm = run_scenario(AssistRun(cfg))
    caller = swarm.robots[0]
    print(f"caller at {caller.position} locks {out.escrow} tokens at tick {out.call_tick}")
    for idx, decision in out.decisions.items():
        r = swarm.robots[idx]
        print(f"  robot {idx} ({r.role.value}, battery {r.battery}): {decision}")
    if out.no_responder:
        print("nobody came; escrow refunded" if out.refunded else "nobody came")
        return
    print(f"robot {out.responder} claimed after {out.ticks_to_claim} ticks, "
          f"location decrypted correctly: {out.location_ok}")
    for idx, reason in out.rejected:
        print(f"  robot {idx}'s late claim rejected: {reason}")


if __name__ == "__main__":
    main()
