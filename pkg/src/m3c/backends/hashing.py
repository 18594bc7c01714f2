"""Deterministic token-hashing embedder.

Stands in for a trained encoder so retrieval math is testable offline:
tokens are bucketed by FNV-1a 64-bit hash and the count vector is
L2-normalized. Integer hashing before the single final normalization makes
the output identical across processes and platforms.
"""

from __future__ import annotations

import math
import re

from ..model import EmbeddingVector
from ..rng import fnv1a64
from .base import Embedder

_TOKEN_RE = re.compile(r"[0-9a-z]+")

DEFAULT_DIM = 256


class HashingEmbedder(Embedder):
    """dim-bucket hashed bag-of-words, L2-normalized. Empty text maps to
    the zero vector, which scores 0 against everything."""

    def __init__(self, dim: int = DEFAULT_DIM):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim

    def embed_text(self, text: str) -> EmbeddingVector:
        counts = [0] * self.dim
        for token in _TOKEN_RE.findall(text.lower()):
            counts[fnv1a64(token.encode("utf-8")) % self.dim] += 1
        norm = math.sqrt(sum(c * c for c in counts))
        if norm == 0.0:
            return EmbeddingVector(self.dim, (0.0,) * self.dim)
        return EmbeddingVector(self.dim, tuple(c / norm for c in counts))


def det_embed_text(text: str, dim: int = DEFAULT_DIM) -> EmbeddingVector:
    """One-shot form of HashingEmbedder.embed_text."""
    return HashingEmbedder(dim).embed_text(text)
