"""Memory-bounded fact retention against a panel of bounded-memory experts.

A learner watches an adversarial stream of taught facts and posed questions,
pays unit cost for every question it cannot answer from its bounded memory,
and tries to track the best of N experts that each follow their own bounded
retention rule.
"""

from .adversaries import (
    FixedStreamAdversary,
    LowerBoundAdversary,
    LowerBoundInstance,
    PigeonholeError,
    build_lower_bound_instance,
    random_stream,
)
from .experts import (
    OracleHandle,
    ScriptedSuite,
    SimulatedValueSuite,
    ThresholdValueSuite,
    ValueBasedExpertState,
    ValueFunction,
    build_scripted_suite,
    load_expert_suite,
    oracle_query,
    random_value_suite,
    true_mistake_update,
    vb_offer,
    vb_true_threshold,
)
from .harness import (
    BoundCheck,
    BoundReport,
    BudgetViolationError,
    ConfigError,
    RunConfig,
    check_bounds,
    emit_outputs,
    run_game,
    sweep,
    verify,
)
from .learners import (
    FullSimLearner,
    LazyLearner,
    MwuLearner,
    RandomEvictLearner,
    ValueLazyLearner,
    kth_largest,
)
from .model import (
    EVALUATE,
    TEACH,
    Event,
    Fact,
    GameLedger,
    Stream,
    dump_stream,
    evaluate,
    load_stream,
    step_cost,
    teach,
    validate_sequential,
)

__version__ = "0.1.0"
