"""Robot swarms on top of the simulated ledger network."""
from .assist import (
    AssistCall,
    AssistConfig,
    AssistOutcome,
    AssistRun,
    Decision,
    ResponderPolicy,
    responder_policy,
    run_assist,
)
from .attestation import (
    AttestationConfig,
    AttestationOutcome,
    AttestationRun,
    DiscoveryRecord,
    register_discovery,
    run_attestation,
    verify_discovery,
)
from .behavior import BehaviorConfig, BehaviorOutcome, BehaviorRun, run_behavior_switch
from .core import (
    Behavior,
    BlobStore,
    NetConfig,
    Robot,
    Role,
    Swarm,
    build_swarm,
    install_load,
    run_scenario,
)
from .s2aas import ExchangeOutcome, S2aaSConfig, S2aaSRun, run_s2aas
from .voting import VoteOutcome, VoteProposal, VotingConfig, VotingRun, run_voting, tally_votes
