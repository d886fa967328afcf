"""muskit: budgeted MUS/MSS enumeration with pluggable shrink/grow policies."""

from .agentlink import (
    FINISH,
    ActRequest,
    EpisodeRecord,
    EpisodeRecorder,
    ExternalPolicy,
    FrequencyHeuristicPolicy,
    ImmediateFinishPolicy,
    Policy,
    PolicyDecision,
    RandomPolicy,
    external_policy_session,
)
from .enumeration import (
    EnumeratorConfig,
    PowerSetMap,
    RunResult,
    TimeLimitExceeded,
    run_marco,
    run_remus,
    run_tome,
)
from .extraction import (
    ExtractionResult,
    compute_reward,
    correct_grow,
    correct_shrink,
    grow_standard,
    grow_with_agent,
    shrink_standard,
    shrink_with_agent,
    verify_mss,
    verify_mus,
)
from .formula import (
    CnfInstance,
    GenerationError,
    GeneratorConfig,
    emit_dimacs,
    generate_graph_coloring,
    generate_sr,
    parse_dimacs,
)
from .musgraph import ExplorationGraph, IncidenceExport
from .oracle import (
    SATISFIABLE,
    UNSATISFIABLE,
    BudgetExhausted,
    CheckLedger,
    OracleVerdict,
    SubsetMask,
    SubsetOracle,
    check,
    check_unbudgeted,
)

__all__ = [
    "ActRequest",
    "BudgetExhausted",
    "CheckLedger",
    "CnfInstance",
    "EnumeratorConfig",
    "EpisodeRecord",
    "EpisodeRecorder",
    "ExplorationGraph",
    "ExternalPolicy",
    "ExtractionResult",
    "FINISH",
    "FrequencyHeuristicPolicy",
    "GenerationError",
    "GeneratorConfig",
    "ImmediateFinishPolicy",
    "IncidenceExport",
    "OracleVerdict",
    "Policy",
    "PolicyDecision",
    "PowerSetMap",
    "RandomPolicy",
    "RunResult",
    "SATISFIABLE",
    "SubsetMask",
    "SubsetOracle",
    "TimeLimitExceeded",
    "UNSATISFIABLE",
    "check",
    "check_unbudgeted",
    "compute_reward",
    "correct_grow",
    "correct_shrink",
    "emit_dimacs",
    "external_policy_session",
    "generate_graph_coloring",
    "generate_sr",
    "grow_standard",
    "grow_with_agent",
    "parse_dimacs",
    "run_marco",
    "run_remus",
    "run_tome",
    "shrink_standard",
    "shrink_with_agent",
    "verify_mss",
    "verify_mus",
]
