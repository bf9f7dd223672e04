"""Robot swarm coordination over a minimal blockchain, simulated deterministically."""
