"""Cosine-similarity retrieval over the memory graph.

The live session context is embedded once; every stored memory of the
requested (owner, kind) store is scored against it and exactly one memory —
the top-1 by cosine — is returned, expanded with its linked closure so
associated memories surface together.

All scores are computed in 64-bit floating point with accumulation in
natural index order, so results are reproducible bit-for-bit and an
independent brute-force implementation lands on the identical ranking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .backends.base import Embedder
from .errors import DimMismatchError
from .memory import MemoryGraph
from .model import EmbeddingVector, MemoryUnit, ModalityItem


@dataclass(frozen=True)
class ContextEncoding:
    """Embedded session context: all turns so far plus perceived captions."""

    vector: EmbeddingVector
    source_turn_count: int


@dataclass(frozen=True)
class RetrievalResult:
    unit: MemoryUnit
    score: float
    expansion: frozenset[MemoryUnit]

    @property
    def ref_ids(self) -> tuple[str, ...]:
        """Unit id first, linked expansion ids after, sorted."""
        return (self.unit.id,) + tuple(sorted(u.id for u in self.expansion))


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """dot(a,b) / (|a|*|b|); 0.0 when either norm is zero.

    A zero vector is the embedding of empty text — "no signal" loses to any
    signal instead of crashing.
    """
    if a.dim != b.dim:
        raise DimMismatchError(f"dim {a.dim} != dim {b.dim}")
    dot = 0.0
    norm_a = 0.0
    norm_b = 0.0
    for x, y in zip(a.values, b.values):
        dot += x * y
        norm_a += x * x
        norm_b += y * y
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (math.sqrt(norm_a) * math.sqrt(norm_b))


def encode_context(
    embedder: Embedder,
    turns: Sequence[tuple[str, str]],
    perceived: Sequence[tuple[str, str]] = (),
) -> ContextEncoding:
    """Jointly embed the session so far: every turn plus the captions of
    modality items perceived up to this point."""
    parts = [f"{speaker}: {text}" for speaker, text in turns]
    parts.extend(caption for _, caption in perceived)
    return ContextEncoding(
        vector=embedder.embed_text("\n".join(parts)),
        source_turn_count=len(turns),
    )


def encode_unit(
    embedder: Embedder,
    unit: MemoryUnit,
    items: Optional[Mapping[str, ModalityItem]] = None,
) -> EmbeddingVector:
    """Embed one memory unit. Modality memories embed through their item
    (using precomputed features when present) if the item is known;
    otherwise through their caption text."""
    if unit.modality_ref is not None and items and unit.modality_ref in items:
        return embedder.embed_item(items[unit.modality_ref])
    return embedder.embed_text(unit.text)


def rank_memories(
    context: ContextEncoding,
    graph: MemoryGraph,
    owner: str,
    kind: str,
    embedder: Embedder,
    items: Optional[Mapping[str, ModalityItem]] = None,
) -> list[tuple[str, float]]:
    """Every unit of the (owner, kind) store scored against the context,
    in descending score order with ties broken by smallest unit id."""
    scored = [
        (unit.id, cosine_similarity(context.vector, encode_unit(embedder, unit, items)))
        for unit in graph.units_for(owner, kind)
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored


def retrieve_top1(
    context: ContextEncoding,
    graph: MemoryGraph,
    owner: str,
    kind: str,
    embedder: Embedder,
    depth: int = 1,
    items: Optional[Mapping[str, ModalityItem]] = None,
) -> Optional[RetrievalResult]:
    """The single most similar memory of the requested kind, with its
    linked closure attached; None when the store is empty."""
    best_id: Optional[str] = None
    best_score = 0.0
    for unit in graph.units_for(owner, kind):
        score = cosine_similarity(context.vector, encode_unit(embedder, unit, items))
        if best_id is None or score > best_score or (score == best_score and unit.id < best_id):
            best_id = unit.id
            best_score = score
    if best_id is None:
        return None
    return RetrievalResult(
        unit=graph.get(best_id),
        score=best_score,
        expansion=frozenset(graph.linked_closure(best_id, depth)),
    )
