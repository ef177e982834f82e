"""handleforge: rewriting calculus for surface braid charts and decorated 1-handles."""

from .braid import (
    BraidLetter,
    BraidWord,
    DegreeMismatch,
    conjugate,
    format_word,
    free_reduce,
    is_identity,
    parse_word,
    permutation_of,
    reduce_far_commutation,
)
from .chart import (
    BoundsReport,
    Chart,
    ChartStats,
    Edge,
    FloatingLoop,
    InvalidChart,
    PatternLoop,
    Vertex,
    chart_stats,
    format_chart,
    is_unknotted_chart,
    parse_chart,
    unbraiding_bounds,
    validate_chart,
)
from .engine import (
    AttachedHandle,
    CertifyResult,
    DecoratedSurface,
    EngineTrace,
    HasBlackVertices,
    NotRepeatedPattern,
    SiteMismatch,
    apply_chart_move,
    apply_move,
    apply_surface_move,
    certify_trace,
    derived_cocore,
    empty_surface,
    enumerate_chart_moves,
    format_script,
    generate_blackless_chart,
    parse_script,
    surfaces_equal,
    unbraid_repeated_pattern,
    unbraid_with_branch,
    unbraid_without_branch,
)
from .handles import (
    DecoratedHandle,
    HandleLabel,
    HandleSystem,
    HandleTrace,
    NormalFormTag,
    SystemInvariants,
    apply_handle_move,
    classify_standard,
    enumerate_reachable,
    format_handles,
    normalize_general,
    normalize_hirose,
    normalize_with_stabilizer,
    parse_handles,
    replay_trace,
    system_invariants,
)

__version__ = "0.1.0"

__all__ = [
    "AttachedHandle",
    "BoundsReport",
    "BraidLetter",
    "BraidWord",
    "CertifyResult",
    "Chart",
    "ChartStats",
    "DecoratedHandle",
    "DecoratedSurface",
    "DegreeMismatch",
    "Edge",
    "EngineTrace",
    "FloatingLoop",
    "HandleLabel",
    "HandleSystem",
    "HandleTrace",
    "HasBlackVertices",
    "InvalidChart",
    "NormalFormTag",
    "NotRepeatedPattern",
    "PatternLoop",
    "SiteMismatch",
    "SystemInvariants",
    "Vertex",
    "apply_chart_move",
    "apply_handle_move",
    "apply_move",
    "apply_surface_move",
    "certify_trace",
    "chart_stats",
    "classify_standard",
    "conjugate",
    "derived_cocore",
    "empty_surface",
    "enumerate_chart_moves",
    "enumerate_reachable",
    "format_chart",
    "format_handles",
    "format_script",
    "format_word",
    "free_reduce",
    "generate_blackless_chart",
    "is_identity",
    "is_unknotted_chart",
    "normalize_general",
    "normalize_hirose",
    "normalize_with_stabilizer",
    "parse_chart",
    "parse_handles",
    "parse_script",
    "parse_word",
    "permutation_of",
    "reduce_far_commutation",
    "replay_trace",
    "surfaces_equal",
    "system_invariants",
    "unbraid_repeated_pattern",
    "unbraid_with_branch",
    "unbraid_without_branch",
    "unbraiding_bounds",
    "validate_chart",
]
