"""Two-stage episode filtering plus the session-pair alignment gate.

Structural first (pure checks, reason codes), then modality-pair alignment,
then the six consistency questions put to a judge verbatim — short-circuit,
so every rejected episode carries exactly one stage's reasons.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .. import prompts
from ..model import Episode, ModalityItem, validate_episode
from .scenario import check_pair_alignment

CONSISTENCY_QUESTIONS = (
    "Is there complete consistency between the environmental, spatial, and "
    "temporal features of the settings within the session? For example, it "
    "would be contradictory if one setting depicts daytime while the other "
    "depicts nighttime, or if spatial features (e.g., location or layout) "
    "and time progression are logically inconsistent. (Yes or No)",
    "Do all sessions within the episode maintain a plausible continuity in "
    "time, space, and context? For example, any stated time intervals or "
    "implied transitions between settings should be logical and coherent. "
    "(Yes or No)",
    "Are all participants depicted as fully engaging with the setting in "
    "real time? References to past or future events should not imply "
    "detachment from the present interaction (e.g., avoiding phrases like "
    "\"for our next scene\" or references to reviewing recorded footage). "
    "(Yes or No)",
    "Are all settings within the session entirely realistic? Any elements "
    "that seem exaggerated, cartoonish, or overly stylized for natural "
    "conversation or interaction should be avoided. (Yes or No)",
    "Is each setting fully utilized and referenced in the conversation? All "
    "settings presented within the session must have a clear role in the "
    "dialogue or interaction, without any being neglected. (Yes or No)",
    "Do all spoken lines reflect the tone and context of natural, real-time "
    "interaction? For instance, lines should avoid referring to the setting "
    "or events in a way that suggests they are pre-recorded, staged, or "
    "viewed from an external perspective. (Yes or No)",
)


@dataclass(frozen=True)
class FilterReport:
    structural: tuple[str, ...]
    consistency: tuple[bool, ...]
    passed: bool


@dataclass(frozen=True)
class EpisodeVerdict:
    """Full pipeline verdict with one stage's rejection reasons."""

    structural: tuple[str, ...] = ()
    misaligned_sessions: tuple[int, ...] = ()
    consistency: Optional[tuple[bool, ...]] = None
    reasons: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.reasons


def structural_filter(episode: Episode) -> list[str]:
    """Reason codes for every structural violation (empty = pass)."""
    return validate_episode(episode)


def _session_transcript(episode: Episode, index: int) -> str:
    names = {p.id: p.name for p in episode.speakers}
    if index >= len(episode.sessions):
        return "(missing)"
    return "\n".join(f"[{names.get(t.speaker, t.speaker)}] {t.text}"
                     for t in episode.sessions[index].turns)


def consistency_filter(episode: Episode, judge) -> FilterReport:
    """Ask the six consistency questions against the framed transcript.
    passed is true iff every answer is yes. Callers run the structural
    filter first."""
    answers = []
    for question in CONSISTENCY_QUESTIONS:
        material = prompts.render("episode_validation", {
            "FIRST SESSION": _session_transcript(episode, 0),
            "SECOND SESSION": _session_transcript(episode, 1),
            "THIRD SESSION": _session_transcript(episode, 2),
            "QUESTION": question,
        })
        answers.append(bool(judge.judge_yes_no(question, material)))
    return FilterReport(structural=(), consistency=tuple(answers),
                        passed=all(answers))


def alignment_filter(episode: Episode, items: Mapping[str, ModalityItem],
                     judge) -> list[int]:
    """Indices of sessions whose two modality items cannot coexist."""
    failing = []
    for session in episode.sessions:
        a, b = (items[i] for i in session.modality_slots)
        if not check_pair_alignment(a, b, judge):
            failing.append(session.index)
    return failing


def filter_episode(episode: Episode, items: Mapping[str, ModalityItem],
                   judge) -> EpisodeVerdict:
    """Run the full gate, short-circuiting at the first failing stage so a
    flawed episode is rejected for exactly one reason."""
    structural = tuple(structural_filter(episode))
    if structural:
        return EpisodeVerdict(structural=structural, reasons=structural)

    misaligned = tuple(alignment_filter(episode, items, judge))
    if misaligned:
        return EpisodeVerdict(
            misaligned_sessions=misaligned,
            reasons=tuple(f"MODALITY_MISALIGNED@session{i}" for i in misaligned))

    report = consistency_filter(episode, judge)
    if not report.passed:
        failed = tuple(f"CONSISTENCY_Q{i + 1}"
                       for i, ok in enumerate(report.consistency) if not ok)
        return EpisodeVerdict(consistency=report.consistency, reasons=failed)
    return EpisodeVerdict(consistency=report.consistency)
