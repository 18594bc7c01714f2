"""Retrieval metrics (R@1, R@5, MRR) and next-speaker accuracy.

A labeled turn is one whose memory_refs are non-empty; its first entry is
the gold unit (the top-1 write; linked expansion ids follow). Each case
ranks the gold's whole (owner, kind) store against the session context up
to that turn, mirroring exactly what the engine saw when it wrote the
reference. Evaluation is within-kind, reported per kind and overall.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .backends.base import Embedder
from .errors import EmptyCasesError, InsufficientTurnsError, MissingGoldError
from .memory import MemoryGraph
from .model import Episode, read_episodes_jsonl
from .orchestrator import Backends, predict_next_speaker
from .retrieval import encode_context, rank_memories
from .rng import SplitMix64

KINDS = ("image", "audio", "text")


def recall_at_k(gold_ranks: Sequence[int], k: int) -> float:
    """Fraction of cases whose 1-based gold rank is within the top k."""
    if not gold_ranks:
        raise EmptyCasesError("no ranks to aggregate")
    if k < 1:
        raise ValueError("k must be >= 1")
    if any(r < 1 for r in gold_ranks):
        raise ValueError("ranks are 1-based")
    return sum(1 for r in gold_ranks if r <= k) / len(gold_ranks)


def mean_reciprocal_rank(gold_ranks: Sequence[int]) -> float:
    if not gold_ranks:
        raise EmptyCasesError("no ranks to aggregate")
    if any(r < 1 for r in gold_ranks):
        raise ValueError("ranks are 1-based")
    return sum(1.0 / r for r in gold_ranks) / len(gold_ranks)


@dataclass(frozen=True)
class KindMetrics:
    r_at_1: float
    r_at_5: float
    mrr: float
    n_cases: int

    @classmethod
    def from_ranks(cls, ranks: Sequence[int]) -> "KindMetrics":
        if not ranks:
            return cls(0.0, 0.0, 0.0, 0)
        return cls(recall_at_k(ranks, 1), recall_at_k(ranks, 5),
                   mean_reciprocal_rank(ranks), len(ranks))

    def to_dict(self) -> dict:
        return {"r_at_1": self.r_at_1, "r_at_5": self.r_at_5,
                "mrr": self.mrr, "n_cases": self.n_cases}


@dataclass(frozen=True)
class MetricsReport:
    overall: KindMetrics
    by_kind: dict[str, KindMetrics]

    @property
    def r_at_1(self) -> float:
        return self.overall.r_at_1

    @property
    def r_at_5(self) -> float:
        return self.overall.r_at_5

    @property
    def mrr(self) -> float:
        return self.overall.mrr

    @property
    def n_cases(self) -> int:
        return self.overall.n_cases

    def to_dict(self) -> dict:
        return {
            "r_at_1": self.r_at_1,
            "r_at_5": self.r_at_5,
            "mrr": self.mrr,
            "n_cases": self.n_cases,
            "by_kind": {kind: self.by_kind[kind].to_dict() for kind in KINDS},
        }


def load_dataset(data_dir) -> list[tuple[Episode, MemoryGraph]]:
    """A generated dataset directory: episodes.jsonl plus memory/<id>.json."""
    data_dir = Path(data_dir)
    episodes = read_episodes_jsonl(data_dir / "episodes.jsonl")
    pairs = []
    for episode in episodes:
        graph_path = data_dir / "memory" / f"{episode.id}.json"
        pairs.append((episode, MemoryGraph.load(graph_path)))
    return pairs


def _item_captions(graph: MemoryGraph) -> dict[str, tuple[str, str]]:
    """item id -> (kind, caption), recovered from stored modality units."""
    captions = {}
    for unit in graph.units():
        if unit.modality_ref is not None and unit.modality_ref not in captions:
            captions[unit.modality_ref] = (unit.kind, unit.text)
    return captions


def gold_ranks(dataset: Sequence[tuple[Episode, MemoryGraph]],
               embedder: Embedder) -> list[tuple[str, int]]:
    """(kind, 1-based gold rank) per labeled turn, in dataset order.

    The context replays what the engine saw when the reference was
    written: all prior turns plus every modality perceived up to and
    including the labeled turn's own introduction.
    """
    cases: list[tuple[str, int]] = []
    for episode, graph in dataset:
        for session in episode.sessions:
            perceived: list[tuple[str, str]] = []
            captions = _item_captions(graph)
            for turn in session.turns:
                if turn.introduces is not None and turn.introduces in captions:
                    perceived.append(captions[turn.introduces])
                if not turn.memory_refs:
                    continue
                gold_id = turn.memory_refs[0]
                if gold_id not in graph:
                    raise MissingGoldError(f"gold unit {gold_id} not in graph")
                gold = graph.get(gold_id)
                context = encode_context(
                    embedder,
                    [(t.speaker, t.text) for t in session.turns[: turn.index]],
                    perceived,
                )
                ranking = rank_memories(context, graph, gold.owner, gold.kind, embedder)
                rank = 1 + next(i for i, (uid, _) in enumerate(ranking) if uid == gold_id)
                cases.append((gold.kind, rank))
    return cases


def eval_retrieval(dataset: Sequence[tuple[Episode, MemoryGraph]],
                   embedder: Embedder) -> MetricsReport:
    """Rank every labeled turn's gold memory within its (owner, kind)
    store; aggregate overall and per kind. Deterministic given the
    embedder."""
    cases = gold_ranks(dataset, embedder)
    if not cases:
        raise MissingGoldError("dataset has no labeled turns")
    by_kind = {kind: KindMetrics.from_ranks([r for k, r in cases if k == kind])
               for kind in KINDS}
    overall = KindMetrics.from_ranks([r for _, r in cases])
    return MetricsReport(overall=overall, by_kind=by_kind)


@dataclass(frozen=True)
class NextSpeakerResult:
    accuracy: float
    evaluated: int
    skipped: int

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "evaluated": self.evaluated,
                "skipped": self.skipped}


def eval_next_speaker(dataset: Sequence[tuple[Episode, MemoryGraph]],
                      backends: Backends, n_samples: int,
                      seed: int) -> NextSpeakerResult:
    """Sample first sessions, show the backend six exchanged turns, and ask
    who naturally responds next; a prediction is correct when it matches
    the actual turn-7 speaker. Sessions shorter than 7 turns are skipped
    and tallied."""
    episodes = [episode for episode, _ in dataset]
    if not episodes:
        raise InsufficientTurnsError("empty dataset")
    rng = SplitMix64(seed).stream("next-speaker")
    matches = 0
    evaluated = 0
    skipped = 0
    for _ in range(n_samples):
        episode = episodes[rng.next_below(len(episodes))]
        session = episode.sessions[0]
        if len(session.turns) < 7:
            skipped += 1
            continue
        prefix = session.turns[:6]
        truth = session.turns[6].speaker
        predicted = predict_next_speaker(
            prefix, session.participants, session.main_speaker, backends,
            episode_id=episode.id,
            speaker_names=tuple((p.id, p.name) for p in episode.speakers),
        )
        evaluated += 1
        if predicted == truth:
            matches += 1
    if evaluated == 0:
        raise InsufficientTurnsError("every sampled session was shorter than 7 turns")
    return NextSpeakerResult(accuracy=matches / evaluated,
                             evaluated=evaluated, skipped=skipped)


def write_report(report: MetricsReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
