"""Budgeted facility placement with advice-guided greedy selection.

The core objects: a Region of population cells grouped into districts, a
monotone submodular coverage objective, a guided greedy selector that follows
per-district targets while keeping a provable fraction of the plain greedy
guarantee, and an iterative loop where an advisor (mock or HTTP) proposes the
targets from natural-language advice.
"""

from .alignment import (
    AdviceItem,
    AdviceRule,
    AlignmentScore,
    EvaluatorConfig,
    RULE_KINDS,
    external_evaluate,
    g_eval,
    score_advice,
)
from .advisor import (
    AdviceBiasedMockAdvisor,
    AdversarialMockAdvisor,
    Advisor,
    AdvisorContext,
    FeedbackRecord,
    HttpAdvisor,
    HttpAdvisorConfig,
    MOVE_L1_LIMIT,
    PromptState,
    ScriptedMockAdvisor,
    TranscriptWriter,
    advisor_from_env,
    build_feedback,
    parse_proposal,
    render_prompt,
    update_prompt,
    validate_proposal,
)
from .coverage import (
    CoverageState,
    apply,
    argmax_gain,
    f_value,
    initial_state,
    marginal_gain,
    state_for,
)
from .domain import (
    Allocation,
    Budget,
    District,
    DistrictAllocation,
    GridCell,
    Region,
    district_counts,
    validate_region,
)
from .errors import (
    AdvisorFailure,
    AdvisorTransportError,
    ConfigurationError,
    ContractViolation,
    CoverplanError,
    EnumerationCapError,
    EvaluatorError,
    FormatError,
    InputError,
    LoadError,
    ProposalBudgetError,
    ProposalError,
    ProposalFloorError,
    ProposalFormatError,
    ProposalMoveError,
    ProposalParseError,
    StructuralError,
)
from .guided_greedy import (
    GuidanceParams,
    SelectionStep,
    SelectionTrace,
    beta_acceptable,
    greedy,
    guarantee_quota,
    guided_greedy,
    verify_beta_subsequence,
)
from .io import (
    GeneratorSpec,
    dumps_stable,
    export_allocation,
    generate_region,
    load_advice,
    load_region,
    load_run_record,
    save_advice,
    save_region,
    save_run_record,
)
from .oracle import (
    BoundCheck,
    OracleResult,
    bound_factors,
    brute_force_opt,
    check_bound,
)
from .orchestrator import (
    IterationRecord,
    LoopConfig,
    RoundInit,
    RunRecord,
    apply_beta1_heuristic,
    per_district_coverage,
    run_multi,
    run_single,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "AdviceBiasedMockAdvisor",
    "AdviceItem",
    "AdviceRule",
    "AdversarialMockAdvisor",
    "Advisor",
    "AdvisorContext",
    "AdvisorFailure",
    "AdvisorTransportError",
    "AlignmentScore",
    "Allocation",
    "BoundCheck",
    "Budget",
    "ConfigurationError",
    "ContractViolation",
    "CoverageState",
    "CoverplanError",
    "District",
    "DistrictAllocation",
    "EnumerationCapError",
    "EvaluatorConfig",
    "EvaluatorError",
    "FeedbackRecord",
    "FormatError",
    "GeneratorSpec",
    "GridCell",
    "GuidanceParams",
    "HttpAdvisor",
    "HttpAdvisorConfig",
    "InputError",
    "IterationRecord",
    "LoadError",
    "LoopConfig",
    "MOVE_L1_LIMIT",
    "OracleResult",
    "PromptState",
    "ProposalBudgetError",
    "ProposalError",
    "ProposalFloorError",
    "ProposalFormatError",
    "ProposalMoveError",
    "ProposalParseError",
    "RULE_KINDS",
    "Region",
    "RoundInit",
    "RunRecord",
    "ScriptedMockAdvisor",
    "SelectionStep",
    "SelectionTrace",
    "StructuralError",
    "TranscriptWriter",
    "advisor_from_env",
    "apply",
    "apply_beta1_heuristic",
    "argmax_gain",
    "beta_acceptable",
    "bound_factors",
    "brute_force_opt",
    "build_feedback",
    "check_bound",
    "district_counts",
    "dumps_stable",
    "export_allocation",
    "external_evaluate",
    "f_value",
    "g_eval",
    "generate_region",
    "greedy",
    "guarantee_quota",
    "guided_greedy",
    "initial_state",
    "load_advice",
    "load_region",
    "load_run_record",
    "marginal_gain",
    "parse_proposal",
    "per_district_coverage",
    "render_prompt",
    "run_multi",
    "run_single",
    "save_advice",
    "save_region",
    "save_run_record",
    "score_advice",
    "state_for",
    "sweep",
    "update_prompt",
    "validate_proposal",
    "validate_region",
    "verify_beta_subsequence",
]
