"""Command line: ``run``, ``report`` and ``validate-chain``.

Exit codes: 0 success, 2 scenario-negative (no decision, no responder,
invalid chain), 1 error.
"""
import argparse
import json
import os
import statistics
import sys
from dataclasses import replace
from pathlib import Path

from . import crypto, metrics
from .config import ConfigError, RunConfig, load_config
from .ledger import validate_dump, write_chain
from .swarm import Role, build_swarm, install_load

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2


def scenario_status(name: str, outcome) -> tuple:
    """(success, reason) for a scenario outcome."""
    if outcome is None:
        return True, "completed"
    if name == "voting":
        return (outcome.winner is not None, outcome.reason if outcome.winner is not None
                else "no-decision")
    if name == "assist":
        if outcome.responder is None:
            return False, "no-responder"
        return outcome.location_ok, "claimed" if outcome.location_ok else "location-mismatch"
    if name == "behavior_switch":
        ok = (outcome.all_side_blocks_by_leader and outcome.main_slots_respected
              and outcome.behavior_consistent)
        return ok, "leader-follower" if ok else "policy-violated"
    if name == "s2aas":
        return outcome.success, outcome.reason
    if name == "attestation":
        ok = outcome.verified and outcome.mutated_rejected
        return ok, "verified" if ok else "verification-failed"
    raise ValueError(name)


def default_run_dir(cfg: RunConfig) -> Path:
    root = Path(os.environ.get("SWARMLEDGER_OUT") or "runs")
    return root / f"{cfg.name}-seed{cfg.seed}"


def config_digest(cfg: RunConfig) -> str:
    """Digest of everything but the seed, to tell compatible runs apart."""
    d = cfg.to_dict()
    d.pop("seed")
    return crypto.hash(json.dumps(d, sort_keys=True).encode()).hex()


def execute(cfg: RunConfig, run_dir=None):
    """Run ``cfg`` in memory. Returns (metrics dict, world, outcome)."""
    run = cfg.scenario_run(run_dir)
    if run is not None:
        swarm = run.build()
        run.setup(swarm)
    else:
        roles = cfg.roster.roles or [Role.UTV] * cfg.roster.count
        swarm = build_swarm(cfg.net(), roles)
    world = swarm.world
    for part in cfg.partitions:
        world.partition(part["groups"], part["from"], part["to"])
    if cfg.load.every:
        install_load(swarm, cfg.load.every, cfg.load.count, cfg.load.start,
                     cfg.load.stop if cfg.load.stop is not None else cfg.duration)
    world.step(cfg.duration)
    if cfg.settle:
        world.quiesce()
    outcome = run.result() if run is not None else None
    ok, reason = scenario_status(cfg.name, outcome)
    m = {
        "scenario": cfg.name,
        "seed": cfg.seed,
        "config_digest": config_digest(cfg),
        "status": "success" if ok else "negative",
        "reason": reason,
        "ticks": world.tick,
        **metrics.compute(world, swarm.chain_id, cfg.chain.confirmation_depth, cfg.throughput_window),
        "outcome": metrics.jsonable(outcome),
    }
    if m["conservation"]["violations"]:
        m["status"], m["reason"] = "negative", "conservation-violated"
    return m, world, outcome


def chain_dumps(world) -> dict:
    """One canonical copy per chain id: the tallest, lowest node index on ties."""
    best = {}
    for node in world.nodes:
        for cid, st in node.chains.items():
            if cid not in best or st.height > best[cid].height:
                best[cid] = st
    return dict(sorted(best.items()))


def run(cfg: RunConfig, run_dir) -> tuple:
    """Execute and persist a run. Returns (metrics, exit code)."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n")
    m, world, _ = execute(cfg, run_dir)
    for st in chain_dumps(world).values():
        write_chain(st, run_dir)
    with open(run_dir / "events.jsonl", "w", encoding="utf-8") as fh:
        for ev in world.events:
            fh.write(json.dumps(ev, sort_keys=True) + "\n")
    (run_dir / "metrics.json").write_text(json.dumps(m, sort_keys=True, indent=2) + "\n")
    return m, EXIT_OK if m["status"] == "success" else EXIT_NEGATIVE


def report(paths) -> dict:
    """Aggregate metrics files, grouped by scenario (never averaged across scenarios)."""
    if not paths:
        raise ValueError("report needs at least one metrics file")
    groups = {}
    for p in paths:
        with open(p, encoding="utf-8") as fh:
            m = json.load(fh)
        groups.setdefault(m["scenario"], []).append((str(p), m))
    out = {}
    for name, items in sorted(groups.items()):
        ref = items[0][1]["config_digest"]
        samples = [s for _, m in items for s in m["latency"]["samples"]]
        summary = metrics.summarize(samples)
        row = {
            "runs": len(items),
            "seeds": [m["seed"] for _, m in items],
            "latency_mean": summary["mean"],
            "latency_median": summary["median"],
            "latency_p95": summary["p95"],
            "throughput": statistics.fmean(m["throughput"]["overall"] for _, m in items),
            "orphan_rate": statistics.fmean(m["orphans"]["rate"] for _, m in items),
            "success_rate": sum(m["status"] == "success" for _, m in items) / len(items),
            "incompatible": [p for p, m in items if m["config_digest"] != ref],
        }
        if name == "voting":
            hits = [m["outcome"]["winner"] == m["outcome"]["truth"] for _, m in items]
            row["vote_accuracy"] = sum(hits) / len(hits)
        out[name] = row
    return out


def format_report(summary: dict) -> str:
    cols = ["runs", "latency_mean", "latency_median", "latency_p95", "throughput",
            "orphan_rate", "success_rate", "vote_accuracy"]
    lines = ["scenario".ljust(16) + "".join(c.rjust(16) for c in cols)]

    def cell(v):
        if v is None:
            return "-"
        return f"{v:.4g}" if isinstance(v, float) else str(v)

    for name, row in summary.items():
        lines.append(name.ljust(16) + "".join(cell(row.get(c)).rjust(16) for c in cols))
        for p in row["incompatible"]:
            lines.append(f"  warning: {p} was run with a different config")
    return "\n".join(lines)


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    run_dir = Path(args.out) if args.out else default_run_dir(cfg)
    m, code = run(cfg, run_dir)
    lat = m["latency"]
    print(f"{m['scenario']} seed={m['seed']}: {m['status']} ({m['reason']})")
    print(f"  height={m['chain']['height']} txs={m['chain']['canonical_txs']} "
          f"throughput={m['throughput']['overall']:.4g} orphans={m['orphans']['count']} "
          f"median_latency={lat['median']}")
    print(f"  artifacts in {run_dir}")
    return code


def _cmd_report(args) -> int:
    summary = report(args.files)
    print(json.dumps(summary, sort_keys=True, indent=2) if args.json else format_report(summary))
    return EXIT_OK


def _cmd_validate(args) -> int:
    data = Path(args.dump).read_bytes()
    v = validate_dump(data)
    if v:
        print(f"valid: height {v.height}")
        return EXIT_OK
    print(f"invalid at block {v.height}: {v.reason}" + (f" ({v.detail})" if v.detail else ""))
    return EXIT_NEGATIVE


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="swarmledger", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a configured scenario")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="run directory (default $SWARMLEDGER_OUT/<scenario>-seed<N>)")
    p.set_defaults(fn=_cmd_run)
    p = sub.add_parser("report", help="aggregate metrics.json files")
    p.add_argument("files", nargs="+")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(fn=_cmd_report)
    p = sub.add_parser("validate-chain", help="re-validate a chain dump")
    p.add_argument("dump")
    p.set_defaults(fn=_cmd_validate)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
