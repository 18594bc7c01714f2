"""Location-based grouping of modality items.

Items are grouped by embedding their location tags and running Lloyd's
k-means with k-means++ seeding on a dedicated seeded stream. Exact-match
grouping would collapse to at most one cluster per distinct tag; embedding
keeps the stated method while staying deterministic. Items without a usable
tag (missing, or the literal "none" assigned to unlocatable audio) are set
aside in an untagged bucket rather than clustered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..backends.hashing import HashingEmbedder
from ..errors import EmptyInputError
from ..model import ModalityItem
from ..rng import SplitMix64

MAX_ITERATIONS = 100
CONVERGENCE_EPS = 1e-9


@dataclass(frozen=True)
class ClusterResult:
    clusters: tuple[tuple[str, ...], ...]  # item ids per cluster
    untagged: tuple[str, ...]

    def assignment(self) -> dict[str, int]:
        return {item_id: index
                for index, cluster in enumerate(self.clusters)
                for item_id in cluster}


def _usable_tag(item: ModalityItem) -> bool:
    return bool(item.location_tag) and item.location_tag.strip().lower() != "none"


def kmeans_plus_plus(points: np.ndarray, k: int, rng: SplitMix64) -> np.ndarray:
    """k-means++ initial centroids drawn from the data points."""
    n = len(points)
    chosen = [rng.next_below(n)]
    dist2 = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < k:
        total = float(dist2.sum())
        if total <= 0.0:
            break  # fewer distinct points than k; caller reduced k already
        r = rng.next_float() * total
        cumulative = np.cumsum(dist2)
        index = int(np.searchsorted(cumulative, r, side="right"))
        index = min(index, n - 1)
        chosen.append(index)
        dist2 = np.minimum(dist2, ((points - points[index]) ** 2).sum(axis=1))
    return points[chosen].copy()


def lloyd(points: np.ndarray, centroids: np.ndarray,
          max_iterations: int = MAX_ITERATIONS,
          eps: float = CONVERGENCE_EPS) -> np.ndarray:
    """Lloyd iterations; returns the final assignment labels.

    Empty clusters are reseeded to the point currently farthest from its
    own centroid (first index on ties).
    """
    k = len(centroids)
    labels = np.zeros(len(points), dtype=int)
    for _ in range(max_iterations):
        dist2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = dist2.argmin(axis=1)

        own = dist2[np.arange(len(points)), labels]
        for cluster in range(k):
            if not (labels == cluster).any():
                worst = int(own.argmax())
                centroids[cluster] = points[worst]
                labels[worst] = cluster
                own[worst] = 0.0

        movement = 0.0
        new_centroids = centroids.copy()
        for cluster in range(k):
            members = points[labels == cluster]
            if len(members):
                new_centroids[cluster] = members.mean(axis=0)
        movement = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if movement < eps:
            break
    return labels


def cluster_by_location(items: list[ModalityItem], k: int = 30,
                        seed: int = 0, dim: int = 256) -> ClusterResult:
    """Partition tagged items into at most k location clusters.

    k is reduced to the number of distinct tag embeddings (duplicate points
    cannot seed distinct clusters). Deterministic under a fixed seed.
    """
    if not items:
        raise EmptyInputError("no items to cluster")

    tagged = [i for i in items if _usable_tag(i)]
    untagged = tuple(i.id for i in items if not _usable_tag(i))
    if not tagged:
        return ClusterResult(clusters=(), untagged=untagged)

    embedder = HashingEmbedder(dim)
    points = np.array([embedder.embed_text(i.location_tag).values for i in tagged],
                      dtype=np.float64)
    distinct = len(np.unique(points, axis=0))
    k = max(1, min(k, distinct))

    rng = SplitMix64(seed).stream("kmeans++")
    centroids = kmeans_plus_plus(points, k, rng)
    labels = lloyd(points, centroids)

    buckets: list[list[str]] = [[] for _ in range(len(centroids))]
    for item, label in zip(tagged, labels):
        buckets[int(label)].append(item.id)
    clusters = tuple(tuple(b) for b in buckets if b)
    return ClusterResult(clusters=clusters, untagged=untagged)
