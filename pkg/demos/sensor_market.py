"""A requester buys a reading from the cheapest registered sensor."""
import tempfile

from swarmledger.swarm import S2aaSConfig, S2aaSRun, run_scenario

STEPS = {
    1: "sensors register",
    2: "requester scans the registry",
    3: "listings confirmed",
    4: "payment sent",
    5: "sensor sees the payment",
    6: "sensor posts the sealed blob link",
    7: "requester checks the blob hash",
}


def main():
    prices = [6, 2, 4]
    with tempfile.TemporaryDirectory() as tmp:
        cfg = S2aaSConfig(prices=prices, choose=prices.index(min(prices)), run_dir=tmp)
        out, _ = run_scenario(S2aaSRun(cfg))
    for listing in out.listings:
        print(f"  {listing.address.hex()[:8]} at {listing.position} sells for {listing.price}")
    for step, tick in out.steps.items():
        print(f"tick {tick:4d}  {STEPS[step]}")
    print(f"paid {out.paid}, reading verified: {out.hash_ok}")


if __name__ == "__main__":
    main()
