from .clustering import ClusterResult, cluster_by_location, kmeans_plus_plus, lloyd
from .filtering import (
    CONSISTENCY_QUESTIONS,
    EpisodeVerdict,
    FilterReport,
    alignment_filter,
    consistency_filter,
    filter_episode,
    structural_filter,
)
from .generate import (
    GenerationResult,
    ProvenanceRecorder,
    generate_dataset,
    generate_one_episode,
    parse_session_text,
    prepare_items,
)
from .scenario import (
    build_scenario,
    check_pair_alignment,
    load_catalog,
    modality_listing,
    parse_scenario_response,
)
from .tagging import (
    apply_memory_tags,
    apply_modality_tags,
    tag_memory_refs,
    tag_modality_turns,
)

__all__ = [
    "ClusterResult",
    "cluster_by_location",
    "kmeans_plus_plus",
    "lloyd",
    "CONSISTENCY_QUESTIONS",
    "EpisodeVerdict",
    "FilterReport",
    "alignment_filter",
    "consistency_filter",
    "filter_episode",
    "structural_filter",
    "GenerationResult",
    "ProvenanceRecorder",
    "generate_dataset",
    "generate_one_episode",
    "parse_session_text",
    "prepare_items",
    "build_scenario",
    "check_pair_alignment",
    "load_catalog",
    "modality_listing",
    "parse_scenario_response",
    "apply_memory_tags",
    "apply_modality_tags",
    "tag_memory_refs",
    "tag_modality_turns",
]
