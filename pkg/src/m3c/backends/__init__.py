from .base import (
    AgentBackend,
    Embedder,
    NO_RETRIEVAL,
    RetrievalDecision,
    TurnBid,
    TurnContext,
    parse_link_verdict,
    parse_retrieval_decision,
    parse_turn_bid,
    parse_yes_no,
)
from .hashing import HashingEmbedder, det_embed_text
from .remote import RemoteBackend, RemoteConfig, remote_call
from .scripted import RandomBidBackend, ScriptedBackend
from .simulated import SimulatedBackend

__all__ = [
    "AgentBackend",
    "Embedder",
    "NO_RETRIEVAL",
    "RetrievalDecision",
    "TurnBid",
    "TurnContext",
    "HashingEmbedder",
    "det_embed_text",
    "RemoteBackend",
    "RemoteConfig",
    "remote_call",
    "RandomBidBackend",
    "ScriptedBackend",
    "SimulatedBackend",
    "parse_link_verdict",
    "parse_retrieval_decision",
    "parse_turn_bid",
    "parse_yes_no",
]
