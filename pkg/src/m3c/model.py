"""Core conversation data model.

An episode is four speakers across three consecutive sessions; each session
is the main speaker plus two partners sharing two modality items (image or
audio) in real time. Memory units are owner-scoped sentences or stored
modality experiences, connected by undirected links.

All types are immutable value objects once constructed and safe to share
across threads. Constructors enforce only per-value shape (non-empty
caption, known kind, field consistency); cross-object rules are reported by
:func:`validate_episode` so the dataset pipeline can count rejection
reasons instead of crashing on flawed episodes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

MODALITY_KINDS = ("image", "audio")
MEMORY_KINDS = ("text", "image", "audio")

SPEAKERS_PER_EPISODE = 4
SESSIONS_PER_EPISODE = 3
SLOTS_PER_SESSION = 2
MIN_TURNS_PER_SESSION = 8


class TimeInterval(str, Enum):
    """Gap between consecutive sessions, one of five values."""

    HOURS = "hours"
    DAYS = "days"
    WEEKS = "weeks"
    MONTHS = "months"
    YEARS = "years"

    @property
    def phrase(self) -> str:
        return _INTERVAL_PHRASES[self]

    @classmethod
    def from_phrase(cls, phrase: str) -> "TimeInterval":
        key = phrase.strip().lower().rstrip(".,")
        for interval, text in _INTERVAL_PHRASES.items():
            if key == text:
                return interval
        raise ValueError(f"unknown interval phrase: {phrase!r}")


_INTERVAL_PHRASES = {
    TimeInterval.HOURS: "a few hours later",
    TimeInterval.DAYS: "a few days later",
    TimeInterval.WEEKS: "a few weeks later",
    TimeInterval.MONTHS: "a few months later",
    TimeInterval.YEARS: "a couple of years later",
}


@dataclass(frozen=True)
class SpeakerProfile:
    id: str
    name: str
    relationship: str

    def __post_init__(self):
        if not self.id:
            raise ValueError("speaker id must be non-empty")
        if not self.name:
            raise ValueError("speaker name must be non-empty")


@dataclass(frozen=True)
class ModalityItem:
    """An image or audio stimulus, represented by its caption. Raw assets
    are referenced by URI only; ``features`` optionally carries a
    precomputed embedding."""

    id: str
    kind: str
    caption: str
    location_tag: Optional[str] = None
    asset_uri: Optional[str] = None
    features: Optional["EmbeddingVector"] = None

    def __post_init__(self):
        if self.kind not in MODALITY_KINDS:
            raise ValueError(f"modality kind must be one of {MODALITY_KINDS}")
        if not self.caption:
            raise ValueError("modality caption must be non-empty")


@dataclass(frozen=True)
class Turn:
    index: int
    speaker: str
    text: str
    introduces: Optional[str] = None
    memory_refs: tuple[str, ...] = ()

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("turn index must be >= 0")
        object.__setattr__(self, "memory_refs", tuple(self.memory_refs))


@dataclass(frozen=True)
class Session:
    index: int
    main_speaker: str
    partners: tuple[str, str]
    modality_slots: tuple[str, str]
    turns: tuple[Turn, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "partners", tuple(self.partners))
        object.__setattr__(self, "modality_slots", tuple(self.modality_slots))
        object.__setattr__(self, "turns", tuple(self.turns))
        if len(self.modality_slots) != SLOTS_PER_SESSION:
            raise ValueError("a session has exactly two modality slots")
        if len(self.partners) != 2:
            raise ValueError("a session has exactly two partners")

    @property
    def participants(self) -> tuple[str, ...]:
        return (self.main_speaker,) + self.partners


@dataclass(frozen=True)
class Episode:
    id: str
    speakers: tuple[SpeakerProfile, ...]
    main_speaker: str
    sessions: tuple[Session, ...]
    intervals: tuple[TimeInterval, ...]

    def __post_init__(self):
        object.__setattr__(self, "speakers", tuple(self.speakers))
        object.__setattr__(self, "sessions", tuple(self.sessions))
        object.__setattr__(
            self, "intervals",
            tuple(TimeInterval(i) for i in self.intervals))

    def speaker(self, speaker_id: str) -> SpeakerProfile:
        for profile in self.speakers:
            if profile.id == speaker_id:
                return profile
        raise KeyError(speaker_id)


@dataclass(frozen=True)
class MemoryUnit:
    """One owner-scoped memory: a summarized sentence with an attribution
    (kind=text), or a stored image/audio experience (kind=image|audio, with
    the item's caption as ``text`` so text embedders can score it)."""

    id: str
    owner: str
    session_of_origin: int
    kind: str
    text: str
    about: Optional[str] = None  # speaker id, "self", or None for modality memories
    modality_ref: Optional[str] = None

    def __post_init__(self):
        if self.kind not in MEMORY_KINDS:
            raise ValueError(f"memory kind must be one of {MEMORY_KINDS}")
        if self.kind == "text":
            if self.about is None:
                raise ValueError("text memories carry an 'about' attribution")
            if self.modality_ref is not None:
                raise ValueError("text memories have no modality_ref")
        else:
            if self.modality_ref is None:
                raise ValueError("modality memories carry a modality_ref")
        if not self.text:
            raise ValueError("memory text must be non-empty")


@dataclass(frozen=True)
class MemoryLink:
    """Undirected association between two memory units. Endpoints are
    stored in sorted order so link(a,b) == link(b,a)."""

    a: str
    b: str

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("a link must connect two distinct units")
        if self.b < self.a:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class EmbeddingVector:
    dim: int
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if len(self.values) != self.dim:
            raise ValueError("values length must equal dim")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding entries must be finite")

    @classmethod
    def of(cls, values: Sequence[float]) -> "EmbeddingVector":
        return cls(dim=len(values), values=tuple(values))


@dataclass(frozen=True)
class SessionPlan:
    """One session's slice of a scenario: who talks and what appears."""

    partners: tuple[str, str]
    modality_slots: tuple[str, str]

    def __post_init__(self):
        object.__setattr__(self, "partners", tuple(self.partners))
        object.__setattr__(self, "modality_slots", tuple(self.modality_slots))


@dataclass(frozen=True)
class Scenario:
    """Pre-conversation plan: speakers, per-session partner pairs and
    modality pairs, and the time gaps between sessions.

    Unlike episodes, a malformed plan is rejected at construction — the
    scenario builder catches the error and redraws.
    """

    speakers: tuple[SpeakerProfile, ...]
    main: str
    session_plans: tuple[SessionPlan, ...]
    intervals: tuple[TimeInterval, ...]
    items: tuple[ModalityItem, ...]
    id: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "speakers", tuple(self.speakers))
        object.__setattr__(self, "session_plans", tuple(self.session_plans))
        object.__setattr__(
            self, "intervals", tuple(TimeInterval(i) for i in self.intervals))
        object.__setattr__(self, "items", tuple(self.items))

        if len(self.speakers) != SPEAKERS_PER_EPISODE:
            raise ValueError("a scenario names exactly four speakers")
        ids = {s.id for s in self.speakers}
        if len(ids) != SPEAKERS_PER_EPISODE or self.main not in ids:
            raise ValueError("speaker ids must be unique and include the main speaker")
        if len(self.session_plans) != SESSIONS_PER_EPISODE:
            raise ValueError("a scenario plans exactly three sessions")
        if len(self.intervals) != SESSIONS_PER_EPISODE - 1:
            raise ValueError("a scenario has exactly two inter-session intervals")

        non_main = ids - {self.main}
        known_items = {i.id for i in self.items}
        used_slots: list[str] = []
        for plan in self.session_plans:
            a, b = plan.partners
            if a == b or not {a, b} <= non_main:
                raise ValueError("partner pairs are two distinct non-main speakers")
            used_slots.extend(plan.modality_slots)
        if len(set(used_slots)) != len(used_slots):
            raise ValueError("no modality item may be reused across sessions")
        if not set(used_slots) <= known_items:
            raise ValueError("every planned slot must reference a known item")

    def item(self, item_id: str) -> ModalityItem:
        for item in self.items:
            if item.id == item_id:
                return item
        raise KeyError(item_id)


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "id": scenario.id,
        "speakers": [
            {"id": s.id, "name": s.name, "relationship": s.relationship}
            for s in scenario.speakers
        ],
        "main": scenario.main,
        "sessions": [
            {"partners": list(p.partners), "modality_slots": list(p.modality_slots)}
            for p in scenario.session_plans
        ],
        "intervals": [i.value for i in scenario.intervals],
        "items": [
            {
                "id": i.id,
                "kind": i.kind,
                "caption": i.caption,
                "location_tag": i.location_tag,
                "asset_uri": i.asset_uri,
            }
            for i in scenario.items
        ],
    }


def scenario_from_dict(data: dict) -> Scenario:
    return Scenario(
        speakers=tuple(
            SpeakerProfile(s["id"], s["name"], s["relationship"])
            for s in data["speakers"]
        ),
        main=data["main"],
        session_plans=tuple(
            SessionPlan(tuple(p["partners"]), tuple(p["modality_slots"]))
            for p in data["sessions"]
        ),
        intervals=tuple(TimeInterval(i) for i in data["intervals"]),
        items=tuple(
            ModalityItem(
                id=i["id"],
                kind=i["kind"],
                caption=i["caption"],
                location_tag=i.get("location_tag"),
                asset_uri=i.get("asset_uri"),
            )
            for i in data["items"]
        ),
        id=data.get("id"),
    )


# ---------------------------------------------------------------------------
# Structural validation
# ---------------------------------------------------------------------------

# Emission order of violation codes; session-scoped codes sort by session
# index within their code.
VIOLATION_CODES = (
    "NAME_DUP",
    "PARTNER_DUP",
    "MIN_TURNS",
    "PARTNER_UNUSED",
    "BAD_SESSION_COUNT",
    "BAD_SPEAKER_COUNT",
    "ORPHAN_SPEAKER_TURN",
)


def validate_episode(episode: Episode) -> list[str]:
    """Report every structural violation of the episode contract.

    Returns a list of violation codes (empty = valid). Session-scoped codes
    carry an ``@session<i>`` suffix. The report is deterministic: codes in
    VIOLATION_CODES order, then by session index. Problems are reported,
    never raised, so callers can count rejection reasons.
    """
    report: list[str] = []

    names = [s.name for s in episode.speakers]
    if len(set(names)) != len(names):
        report.append("NAME_DUP")

    for session in episode.sessions:
        a, b = session.partners
        if a == b or session.main_speaker in (a, b):
            report.append(f"PARTNER_DUP@session{session.index}")

    for session in episode.sessions:
        if len(session.turns) < MIN_TURNS_PER_SESSION:
            report.append(f"MIN_TURNS@session{session.index}")

    used = set()
    for session in episode.sessions:
        used.update(session.partners)
    non_main = {s.id for s in episode.speakers} - {episode.main_speaker}
    if non_main - used:
        report.append("PARTNER_UNUSED")

    if len(episode.sessions) != SESSIONS_PER_EPISODE:
        report.append("BAD_SESSION_COUNT")

    if len(episode.speakers) != SPEAKERS_PER_EPISODE:
        report.append("BAD_SPEAKER_COUNT")

    for session in episode.sessions:
        participants = set(session.participants)
        if any(turn.speaker not in participants for turn in session.turns):
            report.append(f"ORPHAN_SPEAKER_TURN@session{session.index}")

    return report


# ---------------------------------------------------------------------------
# Serialization (one episode per JSONL line, UTF-8, LF)
# ---------------------------------------------------------------------------


def episode_to_dict(episode: Episode) -> dict:
    return {
        "id": episode.id,
        "speakers": [
            {"id": s.id, "name": s.name, "relationship": s.relationship}
            for s in episode.speakers
        ],
        "main_speaker": episode.main_speaker,
        "intervals": [i.value for i in episode.intervals],
        "sessions": [
            {
                "index": session.index,
                "main_speaker": session.main_speaker,
                "partners": list(session.partners),
                "modality_slots": list(session.modality_slots),
                "turns": [
                    {
                        "index": t.index,
                        "speaker": t.speaker,
                        "text": t.text,
                        "introduces": t.introduces,
                        "memory_refs": list(t.memory_refs),
                    }
                    for t in session.turns
                ],
            }
            for session in episode.sessions
        ],
    }


def episode_from_dict(data: dict) -> Episode:
    return Episode(
        id=data["id"],
        speakers=tuple(
            SpeakerProfile(s["id"], s["name"], s["relationship"])
            for s in data["speakers"]
        ),
        main_speaker=data["main_speaker"],
        sessions=tuple(
            Session(
                index=s["index"],
                main_speaker=s["main_speaker"],
                partners=tuple(s["partners"]),
                modality_slots=tuple(s["modality_slots"]),
                turns=tuple(
                    Turn(
                        index=t["index"],
                        speaker=t["speaker"],
                        text=t["text"],
                        introduces=t.get("introduces"),
                        memory_refs=tuple(t.get("memory_refs", ())),
                    )
                    for t in s["turns"]
                ),
            )
            for s in data["sessions"]
        ),
        intervals=tuple(TimeInterval(i) for i in data["intervals"]),
    )


def episode_to_json_line(episode: Episode) -> str:
    return json.dumps(episode_to_dict(episode), ensure_ascii=False,
                      separators=(",", ":"))


def write_episodes_jsonl(episodes: Iterable[Episode], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for episode in episodes:
            fh.write(episode_to_json_line(episode))
            fh.write("\n")


def read_episodes_jsonl(path) -> list[Episode]:
    episodes = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                episodes.append(episode_from_dict(json.loads(line)))
    return episodes
