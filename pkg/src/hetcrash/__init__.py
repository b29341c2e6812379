"""Deterministic crash-consistency simulator for DRAM/NVM/disk stacks.

Simulates the three storage tiers under exhaustive crash injection,
recovers with pluggable strategies, and checks every outcome against an
independent sync-semantics oracle.
"""

from .devices import (
    DiskState,
    DramCache,
    History,
    NvmLog,
    StrategyHooks,
    SystemState,
    initial_state,
    run_to_crash,
    step,
)
from .explorer import (
    Counterexample,
    ExploreConfig,
    SweepReport,
    enumerate_schedules,
    run_one,
    shrink,
    sweep,
    world_config,
)
from .model import (
    BoundsError,
    CorruptStateError,
    Event,
    HetcrashError,
    InvalidTraceError,
    NvmRecord,
    Schedule,
    overlay,
    validate_schedule,
)
from .oracle import Verdict, Witness, acceptable_bytes, check, synced_floor
from .recovery import (
    STRATEGIES,
    STRATEGY_NAMES,
    Strategy,
    get_strategy,
    latest_dev_strategy,
    recover_latest_dev,
    recover_versioned,
    recover_wb_mark,
)
from .trace import ParseError, format_trace, load_trace, parse_trace

__version__ = "0.1.0"

__all__ = [
    "BoundsError",
    "CorruptStateError",
    "Counterexample",
    "DiskState",
    "DramCache",
    "Event",
    "ExploreConfig",
    "HetcrashError",
    "History",
    "InvalidTraceError",
    "NvmLog",
    "NvmRecord",
    "ParseError",
    "STRATEGIES",
    "STRATEGY_NAMES",
    "Schedule",
    "Strategy",
    "StrategyHooks",
    "SweepReport",
    "SystemState",
    "Verdict",
    "Witness",
    "acceptable_bytes",
    "check",
    "enumerate_schedules",
    "format_trace",
    "get_strategy",
    "initial_state",
    "latest_dev_strategy",
    "load_trace",
    "overlay",
    "parse_trace",
    "recover_latest_dev",
    "recover_versioned",
    "recover_wb_mark",
    "run_one",
    "run_to_crash",
    "shrink",
    "step",
    "sweep",
    "synced_floor",
    "validate_schedule",
    "world_config",
]
