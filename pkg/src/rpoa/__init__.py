"""Deterministic implementation and simulation harness for the RPoA
consensus protocol: activity accounting, fee schedules, a staking
ledger, activity-weighted proof-of-work with difficulty retargeting,
fork choice, and seeded attack and bound experiments."""

__version__ = "0.1.0"

from .activity import (
    ActivityParams,
    ServiceRecord,
    time_factor,
    total_activity,
    tx_activity,
    worth_factor,
)
from .fees import FeeSchedule, base_service_fee, entrance_fee, upload_fee
from .models import SERVICE, TRANSFER, Block, BlockHeader, Transaction, body_hash, header_hash
from .ledger import (
    AccountState,
    ChainState,
    LedgerError,
    StakeEntry,
    apply_block,
    apply_transaction,
    new_state,
    quote_service_fees,
    release_matured_stakes,
)
from .consensus import (
    ChainParams,
    DifficultyState,
    HeaderError,
    Tip,
    check_pow,
    cumulative_work,
    difficulty_factor,
    fork_choice,
    mine_header,
    mining_threshold,
    validate_header,
)
from .simnet import (
    AttackConfig,
    BlockRecord,
    HashRateStep,
    MinerSpec,
    MinerStats,
    PowerReport,
    Scenario,
    ServicePolicy,
    SimResult,
    SybilConfig,
    Theorem1Config,
    compute_power,
    run_experiment,
    run_majority_attack,
    run_simulation,
    run_sybil_experiment,
    run_theorem1_experiment,
)
