"""Contracts between the engine and whatever generates, judges, or embeds.

An AgentBackend plays one speaker: it bids for turns, asks for memory
retrieval, produces utterances, summarizes sessions, and judges memory
links and yes/no questions. An Embedder turns text or modality items into
fixed-dimension vectors. Both contracts are deliberately small so scripted,
simulated, and remote-HTTP implementations are interchangeable.

Token grammar shared by all backends:
  turn bid      -> "[YES]" (+ probability) | "[NO]"
  retrieval     -> "[RET_IMG]" | "[RET_AUDIO]" | "[NO_RET]"
  link verdict  -> "[POSITIVE]" | "[NEGATIVE]"
  yes/no        -> "yes" | "no" (case-insensitive, punctuation tolerated)
Anything else is a BACKEND_PROTOCOL error carrying the raw text.
"""

from __future__ import annotations

import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

from ..errors import BackendProtocolError
from ..model import EmbeddingVector, ModalityItem

TOKEN_YES = "[YES]"
TOKEN_NO = "[NO]"
TOKEN_RET_IMG = "[RET_IMG]"
TOKEN_RET_AUDIO = "[RET_AUDIO]"
TOKEN_NO_RET = "[NO_RET]"
TOKEN_POSITIVE = "[POSITIVE]"
TOKEN_NEGATIVE = "[NEGATIVE]"

RETRIEVAL_TOKENS = (TOKEN_RET_IMG, TOKEN_RET_AUDIO, TOKEN_NO_RET)

# retrieval token -> memory store kind
RETRIEVAL_KINDS = {TOKEN_RET_IMG: "image", TOKEN_RET_AUDIO: "audio"}


@dataclass(frozen=True)
class TurnBid:
    """An agent's claim on the next turn. probability present iff wants_turn."""

    wants_turn: bool
    probability: Optional[float] = None

    def __post_init__(self):
        if self.wants_turn:
            if self.probability is None:
                raise ValueError("a positive bid carries a probability")
            if not 0.0 <= self.probability <= 1.0:
                raise ValueError("probability must be in [0, 1]")
        elif self.probability is not None:
            raise ValueError("a declined bid carries no probability")


@dataclass(frozen=True)
class RetrievalDecision:
    """Exactly one retrieval token: RET_IMG, RET_AUDIO, or NO_RET."""

    token: str

    def __post_init__(self):
        if self.token not in ("RET_IMG", "RET_AUDIO", "NO_RET"):
            raise ValueError(f"unknown retrieval token: {self.token}")

    @property
    def kind(self) -> Optional[str]:
        """Memory kind to retrieve, or None for NO_RET."""
        return {"RET_IMG": "image", "RET_AUDIO": "audio"}.get(self.token)


NO_RETRIEVAL = RetrievalDecision("NO_RET")


@dataclass(frozen=True)
class TurnContext:
    """Everything a backend sees when acting for one speaker at one turn."""

    episode_id: str
    session_index: int
    turn_index: int
    speaker: str                                   # who is being asked to act
    main_speaker: str
    participants: tuple[str, ...]                  # main + 2 partners
    speaker_names: tuple[tuple[str, str], ...]     # (id, name) pairs
    relationships: tuple[tuple[str, str], ...]     # (id, relationship) pairs
    turns: tuple[tuple[str, str], ...] = ()        # (speaker id, text) so far
    perceived: tuple[tuple[str, str], ...] = ()    # (kind, caption) introduced so far
    recalled: tuple[str, ...] = ()                 # memory texts injected at session open
    interval: Optional[str] = None                 # phrase since the previous session

    def name_of(self, speaker_id: str) -> str:
        return dict(self.speaker_names).get(speaker_id, speaker_id)


class AgentBackend(ABC):
    """One conversational agent. Implementations must be deterministic
    given their seed/script and tolerate concurrent calls."""

    @abstractmethod
    def decide_turn(self, context: TurnContext) -> TurnBid: ...

    @abstractmethod
    def decide_retrieval(self, context: TurnContext) -> RetrievalDecision: ...

    @abstractmethod
    def generate_utterance(self, context: TurnContext, retrieved=None) -> str: ...

    @abstractmethod
    def summarize(self, transcript: str, perspective: str) -> str: ...

    @abstractmethod
    def judge_link(self, memory_a: str, memory_b: str) -> bool: ...

    @abstractmethod
    def judge_yes_no(self, question: str, material: str) -> bool: ...

    def decide_modality(self, context: TurnContext) -> bool:
        """Whether the main speaker volunteers the next modality item this
        turn. Default backends never volunteer; the turn-5 fallback then
        schedules insertion at a seeded random later turn."""
        return False

    def complete(self, prompt_id: str, substitutions: dict) -> str:
        """Raw completion for dataset-pipeline prompts. Implementations
        that only drive live sessions may leave this unsupported."""
        raise BackendProtocolError(f"backend cannot complete prompt {prompt_id!r}")


class Embedder(ABC):
    """Fixed-dimension encoder for retrieval. ``embed_item`` prefers a
    precomputed feature vector and falls back to the caption text."""

    dim: int

    @abstractmethod
    def embed_text(self, text: str) -> EmbeddingVector: ...

    def embed_item(self, item: ModalityItem) -> EmbeddingVector:
        if item.features is not None:
            if item.features.dim != self.dim:
                from ..errors import DimMismatchError

                raise DimMismatchError(
                    f"item features dim {item.features.dim} != embedder dim {self.dim}")
            return item.features
        return self.embed_text(item.caption)


# ---------------------------------------------------------------------------
# Token grammar parsing (used by the remote adapter and protocol tests)
# ---------------------------------------------------------------------------

_CONFIDENCE_RE = re.compile(r"(?:p\s*=\s*)?(\d+(?:\.\d+)?)")


def parse_turn_bid(raw: str, token_probability: Optional[float] = None) -> TurnBid:
    """Map model output onto a TurnBid.

    Probability comes from the reported token likelihood when available,
    else from a self-reported confidence following the token
    (e.g. "[YES] 0.8" or "[YES] p=0.8").
    """
    text = raw.strip()
    if text.startswith(TOKEN_NO):
        return TurnBid(wants_turn=False)
    if text.startswith(TOKEN_YES):
        if token_probability is not None:
            return TurnBid(wants_turn=True, probability=float(token_probability))
        match = _CONFIDENCE_RE.search(text[len(TOKEN_YES):])
        if match:
            value = float(match.group(1))
            if 0.0 <= value <= 1.0:
                return TurnBid(wants_turn=True, probability=value)
        raise BackendProtocolError("positive bid without a probability", raw=raw)
    raise BackendProtocolError("turn bid outside token grammar", raw=raw)


def parse_retrieval_decision(raw: str) -> RetrievalDecision:
    text = raw.strip()
    for token in RETRIEVAL_TOKENS:
        if text.startswith(token):
            return RetrievalDecision(token.strip("[]"))
    raise BackendProtocolError("retrieval decision outside token grammar", raw=raw)


def parse_link_verdict(raw: str) -> bool:
    text = raw.strip()
    if text.startswith(TOKEN_POSITIVE):
        return True
    if text.startswith(TOKEN_NEGATIVE):
        return False
    raise BackendProtocolError("link verdict outside token grammar", raw=raw)


def parse_yes_no(raw: str) -> bool:
    text = raw.strip().strip(".,!").lower()
    if text in ("yes", "[yes]"):
        return True
    if text in ("no", "[no]"):
        return False
    raise BackendProtocolError("answer outside yes/no grammar", raw=raw)
