"""Desk-scale dataset construction.

Flow per run: refine image captions and fill missing location tags through
the backend (recorded verbatim in the provenance log), cluster items by
location, then generate episodes as independent jobs on a bounded worker
pool with a resumable ledger. Each job: scenario, three generated sessions,
modality tagging, memory-reference tagging, end-of-session memories and
links, then the filter gate. Accepted episodes land in episodes.jsonl with
their memory graphs; rejections are counted by reason.
"""

from __future__ import annotations

import json
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..backends.base import AgentBackend, Embedder
from ..errors import M3CError
from ..memory import MemoryGraph
from ..model import (
    Episode,
    ModalityItem,
    Scenario,
    Session,
    Turn,
    episode_to_json_line,
)
from ..orchestrator import LinkCandidatePolicy, close_session
from ..rng import SplitMix64
from .clustering import cluster_by_location
from .filtering import EpisodeVerdict, filter_episode
from .scenario import build_scenario
from .tagging import (
    apply_memory_tags,
    apply_modality_tags,
    tag_memory_refs,
    tag_modality_turns,
)

_LINE_RE = re.compile(r"^\[([^\]]+)\]\s*(.+)$")
_ORDINALS = ("first", "second", "third")


class ProvenanceRecorder:
    """Wraps a backend so every dataset-facing call is logged verbatim:
    prompt id, substitutions, raw response, timestamp. Covers raw prompt
    completions plus the summarize/judge calls made at session close.
    Thread-safe appends."""

    def __init__(self, backend: AgentBackend, path: Optional[Path]):
        self.backend = backend
        self.path = Path(path) if path else None
        self._lock = threading.Lock()

    def __getattr__(self, name):
        return getattr(self.backend, name)

    def _record(self, prompt_id: str, substitutions: dict, response) -> None:
        if self.path is None:
            return
        record = {
            "prompt_id": prompt_id,
            "substitutions": {k: str(v) for k, v in substitutions.items()},
            "response": response,
            "timestamp": time.time(),
        }
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False))
                fh.write("\n")

    def complete(self, prompt_id: str, substitutions: dict) -> str:
        response = self.backend.complete(prompt_id, substitutions)
        self._record(prompt_id, substitutions, response)
        return response

    def summarize(self, transcript: str, perspective: str) -> str:
        response = self.backend.summarize(transcript, perspective)
        self._record("memory_summary", {"SESSION CONVERSATION": transcript,
                                        "MAIN SPEAKER NAME": perspective}, response)
        return response

    def judge_link(self, memory_a: str, memory_b: str) -> bool:
        verdict = self.backend.judge_link(memory_a, memory_b)
        self._record("memory_linking", {"MEMORY 1": memory_a, "MEMORY 2": memory_b},
                     verdict)
        return verdict

    def judge_yes_no(self, question: str, material: str) -> bool:
        verdict = self.backend.judge_yes_no(question, material)
        self._record("judge_yes_no", {"QUESTION": question, "MATERIAL": material},
                     verdict)
        return verdict


@dataclass
class GenerationResult:
    accepted: list[tuple[Episode, MemoryGraph]]
    rejected: list[tuple[str, EpisodeVerdict]]  # (episode id, verdict)
    skipped: int = 0  # jobs already done in the ledger

    @property
    def rejection_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for _, verdict in self.rejected:
            for reason in verdict.reasons:
                counts[reason] = counts.get(reason, 0) + 1
        return counts


def prepare_items(items: list[ModalityItem], backend) -> list[ModalityItem]:
    """Caption refinement for images and location assignment for untagged
    items, both through the backend's prompts."""
    prepared = []
    for item in items:
        caption = item.caption
        if item.kind == "image":
            caption = backend.complete("caption_refine", {"CAPTION": item.caption}).strip() \
                or item.caption
        tag = item.location_tag
        if not tag:
            prompt_id = "location_image" if item.kind == "image" else "location_audio"
            tag = backend.complete(prompt_id, {"CAPTION": caption}).strip() or None
        prepared.append(ModalityItem(
            id=item.id, kind=item.kind, caption=caption, location_tag=tag,
            asset_uri=item.asset_uri, features=item.features))
    return prepared


def parse_session_text(raw: str, name_to_id: dict[str, str]) -> list[Turn]:
    """Turn "[Name] text" lines into Turn records. Lines by unknown
    speakers or without the bracket prefix are dropped."""
    turns = []
    for line in raw.splitlines():
        match = _LINE_RE.match(line.strip())
        if not match:
            continue
        speaker_id = name_to_id.get(match.group(1).strip().lower())
        if speaker_id is None:
            continue
        turns.append(Turn(index=len(turns), speaker=speaker_id,
                          text=match.group(2).strip()))
    return turns


def _prior_block(sessions: list[Session], names: dict[str, str]) -> str:
    parts = []
    for session in sessions:
        transcript = "\n".join(
            f"[{names[t.speaker]}] {t.text}" for t in session.turns)
        parts.append(f"###{_ORDINALS[session.index].capitalize()} session conversation:\n"
                     f"{transcript}\n")
    return "\n".join(parts) + ("\n" if parts else "")


def generate_one_episode(
    scenario: Scenario,
    backend,
    embedder: Embedder,
    episode_id: str,
    policy: Optional[LinkCandidatePolicy] = None,
) -> tuple[Episode, MemoryGraph]:
    """Dataset-mode construction of one episode from a fixed scenario:
    whole sessions are generated in single backend calls, then tagged."""
    graph = MemoryGraph()
    names = {p.id: p.name for p in scenario.speakers}
    name_to_id = {p.name.lower(): p.id for p in scenario.speakers}
    rels = {p.id: p.relationship for p in scenario.speakers}
    items = {i.id: i for i in scenario.items}
    main = scenario.main
    sessions: list[Session] = []

    for index, plan in enumerate(scenario.session_plans):
        captions = [items[i].caption for i in plan.modality_slots]
        interval_clause = ""
        if index >= 1:
            interval = scenario.intervals[index - 1]
            interval_clause = (f", {interval.phrase} the "
                               f"{_ORDINALS[index - 1]}-session conversation,")
        raw = backend.complete("session_generation", {
            "PRIOR SESSIONS": _prior_block(sessions, names),
            "SESSION ORDINAL": _ORDINALS[index],
            "INTERVAL CLAUSE": interval_clause,
            "MAIN SPEAKER NAME": names[main],
            "MAIN SPEAKER RELATIONSHIP": rels[main],
            "PARTNER 1 NAME": names[plan.partners[0]],
            "PARTNER 1 RELATIONSHIP": rels[plan.partners[0]],
            "PARTNER 2 NAME": names[plan.partners[1]],
            "PARTNER 2 RELATIONSHIP": rels[plan.partners[1]],
            "CAPTION 1": captions[0],
            "CAPTION 2": captions[1],
        })
        turns = parse_session_text(raw, name_to_id)
        session = Session(index=index, main_speaker=main, partners=plan.partners,
                          modality_slots=plan.modality_slots, turns=tuple(turns))

        slot_items = [items[i] for i in plan.modality_slots]
        indices = tag_modality_turns(session.turns, slot_items, backend, names)
        session = apply_modality_tags(session, indices)

        if index >= 1:
            memories = graph.units_for_owner(main)
            pairs = tag_memory_refs(session.turns, memories, backend, names,
                                    main_speaker_name=names[main],
                                    session_ordinal=_ORDINALS[index])
            session = apply_memory_tags(session, pairs, memories)

        sessions.append(session)
        episode_so_far = Episode(id=episode_id, speakers=scenario.speakers,
                                 main_speaker=main, sessions=tuple(sessions),
                                 intervals=scenario.intervals)
        close_session(episode_so_far, index, backend, graph,
                      policy, [main], items)

    episode = Episode(id=episode_id, speakers=scenario.speakers, main_speaker=main,
                      sessions=tuple(sessions), intervals=scenario.intervals)
    return episode, graph


def generate_dataset(
    catalog: list[ModalityItem],
    n_episodes: int,
    seed: int,
    out_dir,
    backend: AgentBackend,
    embedder: Embedder,
    *,
    k: int = 30,
    workers: int = 1,
    judge: Optional[AgentBackend] = None,
    policy: Optional[LinkCandidatePolicy] = None,
    min_cluster_items: int = 6,
) -> GenerationResult:
    """The full construction pipeline into ``out_dir``.

    Writes episodes.jsonl (accepted), memory/<episode>.json, rejects.jsonl,
    provenance.jsonl, and a resumable jobs.json ledger. Rerunning with the
    same inputs skips completed jobs and reproduces identical episodes.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "memory").mkdir(exist_ok=True)
    ledger_path = out / "jobs.json"
    ledger = json.loads(ledger_path.read_text()) if ledger_path.exists() else {}

    recorder = ProvenanceRecorder(backend, out / "provenance.jsonl")
    judge = judge if judge is not None else backend

    items = prepare_items(catalog, recorder)
    result = cluster_by_location(items, k=k, seed=seed)
    by_id = {i.id: i for i in items}
    eligible = [c for c in result.clusters if len(c) >= min_cluster_items]
    if not eligible:
        raise M3CError("no cluster has enough pair-aligned items to plan a scenario")

    def job(index: int):
        episode_id = f"ep-{seed:08x}-{index:04d}"
        if ledger.get(episode_id) == "done":
            return episode_id, None, None
        rng = SplitMix64(seed).stream(f"episode/{index}")
        cluster = eligible[rng.next_below(len(eligible))]
        cluster_items = [by_id[i] for i in cluster]
        scenario = build_scenario(cluster_items, recorder, seed=seed,
                                  scenario_id=episode_id, judge=judge)
        episode, graph = generate_one_episode(scenario, recorder, embedder,
                                              episode_id, policy)
        verdict = filter_episode(episode, {i.id: i for i in scenario.items}, judge)
        return episode_id, (episode, graph), verdict

    accepted: list[tuple[Episode, MemoryGraph]] = []
    rejected: list[tuple[str, EpisodeVerdict]] = []
    skipped = 0
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for episode_id, built, verdict in pool.map(job, range(n_episodes)):
            if built is None:
                skipped += 1
                continue
            episode, graph = built
            if verdict.passed:
                accepted.append((episode, graph))
            else:
                rejected.append((episode_id, verdict))
            ledger[episode_id] = "done"

    with open(out / "episodes.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for episode, _ in accepted:
            fh.write(episode_to_json_line(episode))
            fh.write("\n")
    for episode, graph in accepted:
        graph.save(out / "memory" / f"{episode.id}.json")
    with open(out / "rejects.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for episode_id, verdict in rejected:
            fh.write(json.dumps({"id": episode_id, "reasons": list(verdict.reasons)}))
            fh.write("\n")
    ledger_path.write_text(json.dumps(ledger, indent=2))
    return GenerationResult(accepted=accepted, rejected=rejected, skipped=skipped)
