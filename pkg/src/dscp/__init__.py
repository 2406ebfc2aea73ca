"""Maximum disjoint set covers, offline and online.

An instance is a universe {0,..,n-1} plus a sequence of subsets; the goal
is to partition the subsets into as many groups as possible whose unions
each cover the universe.  The package provides exact and approximate
offline solvers, irrevocable online algorithms (including a deterministic
streaming recoloring scheme with a provable cover guarantee), adversarial
lower-bound games, and a seeded experiment harness with a CLI.
"""

from .core import (
    Allocation,
    Coloring,
    FrequencyTable,
    HypergraphView,
    Instance,
    MalformedInstanceError,
    ShrinkState,
    Subset,
    SubsetSequence,
    Universe,
    build_hypergraph,
    count_covers,
    format_instance,
    frequencies,
    is_set_cover,
    parse_instance,
    shrink_stream,
    validate_polychromatic,
)
from .offline import (
    ExactResult,
    ExpectationTracker,
    LimitExceededError,
    TrackerProbe,
    TranscriptError,
    default_num_colors,
    exact_max_disjoint_covers,
    pairing_offline,
    polyoff,
    recolor_argmin,
)
from .online import (
    GreedyCover,
    OnlineAlgorithm,
    OnlineRunResult,
    PolyOn,
    RandColour,
    run_online,
)
from .adversary import (
    AdversaryTranscript,
    BitUniverse,
    BottleneckSet,
    GameResult,
    ScomAllocationView,
    SplitRecord,
    bound_sa,
    bound_sb,
    derive_structure,
    gen_scom,
    gen_tail,
    gen_theorem2,
    max_bound,
    play_game,
    transcript_to_text,
)
from .cli import (
    ExperimentConfig,
    ExperimentRecord,
    ExternalAlgorithm,
    ProtocolViolationError,
    emit_results,
    external_protocol_driver,
    make_algorithm,
    random_instance,
    run_experiment,
    stable_seed,
)

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "AdversaryTranscript",
    "BitUniverse",
    "BottleneckSet",
    "Coloring",
    "ExactResult",
    "ExpectationTracker",
    "ExperimentConfig",
    "ExperimentRecord",
    "ExternalAlgorithm",
    "FrequencyTable",
    "GameResult",
    "GreedyCover",
    "HypergraphView",
    "Instance",
    "LimitExceededError",
    "MalformedInstanceError",
    "OnlineAlgorithm",
    "OnlineRunResult",
    "PolyOn",
    "ProtocolViolationError",
    "RandColour",
    "ScomAllocationView",
    "ShrinkState",
    "SplitRecord",
    "Subset",
    "SubsetSequence",
    "TrackerProbe",
    "TranscriptError",
    "Universe",
    "bound_sa",
    "bound_sb",
    "build_hypergraph",
    "count_covers",
    "default_num_colors",
    "derive_structure",
    "emit_results",
    "exact_max_disjoint_covers",
    "external_protocol_driver",
    "format_instance",
    "frequencies",
    "gen_scom",
    "gen_tail",
    "gen_theorem2",
    "is_set_cover",
    "make_algorithm",
    "max_bound",
    "pairing_offline",
    "parse_instance",
    "play_game",
    "polyoff",
    "random_instance",
    "recolor_argmin",
    "run_experiment",
    "run_online",
    "shrink_stream",
    "stable_seed",
    "transcript_to_text",
    "validate_polychromatic",
]
