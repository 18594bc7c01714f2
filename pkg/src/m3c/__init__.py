"""Multi-party, multi-session conversation engine with a linked multimodal
memory graph: orchestration, top-1 cosine retrieval, a dataset construction
pipeline, retrieval/turn-taking evaluation, and an HTTP service."""

from .memory import MemoryGraph, format_summary, parse_summary
from .model import (
    EmbeddingVector,
    Episode,
    MemoryLink,
    MemoryUnit,
    ModalityItem,
    Scenario,
    Session,
    SessionPlan,
    SpeakerProfile,
    TimeInterval,
    Turn,
    validate_episode,
)
from .orchestrator import (
    LinkCandidatePolicy,
    arbitrate_turn,
    close_session,
    predict_next_speaker,
    run_episode,
    schedule_modality,
)
from .retrieval import (
    ContextEncoding,
    RetrievalResult,
    cosine_similarity,
    encode_context,
    rank_memories,
    retrieve_top1,
)

__version__ = "0.1.0"

__all__ = [
    "EmbeddingVector",
    "Episode",
    "MemoryGraph",
    "MemoryLink",
    "MemoryUnit",
    "ModalityItem",
    "Scenario",
    "Session",
    "SessionPlan",
    "SpeakerProfile",
    "TimeInterval",
    "Turn",
    "validate_episode",
    "parse_summary",
    "format_summary",
    "ContextEncoding",
    "RetrievalResult",
    "cosine_similarity",
    "encode_context",
    "rank_memories",
    "retrieve_top1",
    "LinkCandidatePolicy",
    "arbitrate_turn",
    "close_session",
    "predict_next_speaker",
    "run_episode",
    "schedule_modality",
    "__version__",
]
