from .accounts import ESCROW_TIMEOUT, AccountState, check_tx, count_multisig, replay
from .chain import (
    ApplyResult,
    BlockRejected,
    ChainState,
    apply_block,
    check_header,
    confirmations,
    validate_blocks,
    validate_chain,
    validate_transaction,
)
from .dump import block_summaries, dump_chain, load_chain, validate_dump, write_chain
from .mining import mine_block, pack, peg_credit_tx
from .payloads import (
    decode_claim,
    decode_proposal,
    encode_claim,
    encode_peg_debit,
    encode_proposal,
    option_address,
)
from .peg import (
    PegError,
    create_sidechain,
    cross_chain_supply,
    debit_tx,
    in_flight,
    link,
    peg_in,
    root_supply,
)
from .types import (
    MAX_PAYLOAD,
    Block,
    BlockHeader,
    ChainParams,
    PowPolicy,
    RoundRobinPolicy,
    SingleMinerPolicy,
    Transaction,
    TxKind,
    Verdict,
    decode_block,
    decode_tx,
    genesis_block,
    make_tx,
    tx_root,
)
