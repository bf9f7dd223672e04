"""Split a proof-of-work swarm in two, let both halves mine, then reconnect."""
from swarmledger.netsim import LatencyModel
from swarmledger.swarm import NetConfig, build_swarm, install_load


def main():
    net = NetConfig(seed=3, policy="pow", pow_probability=0.05, pow_attempts=2,
                    latency=LatencyModel.uniform(1, 4))
    swarm = build_swarm(net, ["UTV"] * 4)
    world = swarm.world
    world.partition([[0, 1], [2, 3]], 50, 300)
    install_load(swarm, every=5, count=1, stop=600)

    world.step(299)
    print("just before the heal:")
    for node in world.nodes:
        st = node.chains["main"]
        print(f"  node {node.index}: height {st.height}, head {st.head.hex()[:12]}")

    world.settle("main", 6000)
    print("after the heal:")
    for node in world.nodes:
        st = node.chains["main"]
        print(f"  node {node.index}: height {st.height}, head {st.head.hex()[:12]}, "
              f"orphans {len(st.orphans)}, pending {len(st.mempool)}")
    print("converged:", world.converged("main"))


if __name__ == "__main__":
    main()
