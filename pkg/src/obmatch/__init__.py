"""Budget-oblivious online matching: engines, oracles, auditor, harness."""

from .instance import (
    Bidder,
    Instance,
    InstanceParseError,
    PlantedSolution,
    ProblemClass,
    gen_example_no_surpass,
    gen_example_three,
    gen_planted,
    gen_random,
    gen_upper_triangular,
    mu,
    read_instance,
    validate,
    write_instance,
)
from .engines import (
    ONE_MINUS_1_OVER_E,
    ClassMismatchError,
    RankAssignment,
    RunOutcome,
    draw_ranks,
    run_algorithm,
    run_for_class,
    run_general,
    run_greedy,
    run_msvv,
    run_ranking,
    run_ranking_permutation,
    run_single_valued,
)
from .oracle import (
    NodeLimitExceeded,
    OfflineOptimum,
    OptKind,
    offline_optimum,
    opt_general_bound,
    opt_general_exact,
    opt_obm,
    opt_single_valued,
    planted_certificate,
)
from .audit import (
    AuditReport,
    audit,
    check_multiset_lemmas,
    check_no_surpassing,
    check_threshold_dominance,
    run_with_removal,
    thresholds,
)
from .harness import (
    ContributionEstimate,
    FakeMoneyBoundViolation,
    RatioEstimate,
    estimate_edge_contributions,
    estimate_ratio,
    estimate_star_contributions,
    fake_money_report,
    planted_stars,
    sweep_mu,
)

__version__ = "0.1.0"
