"""Post-generation tagging: where modalities begin, which turns use memory.

Backends answer in 1-based utterance numbering (and letters for memory
tagging); internal turn and memory indices are 0-based. The conversion
lives here and nowhere else.
"""

from __future__ import annotations

import re
from typing import Mapping, Optional, Sequence

from ..errors import (
    BackendProtocolError,
    BadLetterError,
    BadLineError,
    BadNumberError,
    DuplicateTurnError,
    OutOfRangeError,
)
from ..model import MemoryUnit, ModalityItem, Session, Turn

_NUMBER_RE = re.compile(r"\d+")
_REF_LINE_RE = re.compile(r"^\s*([A-Za-z])\s*-\s*(\d+)\s*$")


def _labelled(turns: Sequence[Turn], names: Optional[Mapping[str, str]]) -> list[str]:
    names = names or {}
    return [f"[{names.get(t.speaker, t.speaker)}] {t.text}" for t in turns]


def tag_modality_turns(turns: Sequence[Turn], items: Sequence[ModalityItem],
                       backend, names: Optional[Mapping[str, str]] = None
                       ) -> tuple[int, int]:
    """First-mention turn index for each of the session's two items
    (0-based). The backend sees utterances numbered from 1."""
    listing = "\n".join(f"{n}. {line}"
                        for n, line in enumerate(_labelled(turns, names), start=1))
    raw = backend.complete("modality_tagging", {
        "CAPTION A": items[0].caption,
        "CAPTION B": items[1].caption,
        "UTTERANCE LIST": listing,
    })
    numbers = _NUMBER_RE.findall(raw)
    if len(numbers) < 2:
        raise BackendProtocolError("expected two utterance numbers", raw=raw)
    first, second = int(numbers[0]), int(numbers[1])
    for number in (first, second):
        if not 1 <= number <= len(turns):
            raise OutOfRangeError(f"utterance {number} outside 1..{len(turns)}")
    if first == second:
        raise DuplicateTurnError("both items mapped to one utterance")
    return first - 1, second - 1


def apply_modality_tags(session: Session, indices: tuple[int, int]) -> Session:
    """Write the two introductions onto the session's turns."""
    by_turn = {indices[0]: session.modality_slots[0],
               indices[1]: session.modality_slots[1]}
    turns = tuple(
        Turn(index=t.index, speaker=t.speaker, text=t.text,
             introduces=by_turn.get(t.index, t.introduces),
             memory_refs=t.memory_refs)
        for t in session.turns
    )
    return Session(index=session.index, main_speaker=session.main_speaker,
                   partners=session.partners, modality_slots=session.modality_slots,
                   turns=turns)


def tag_memory_refs(turns: Sequence[Turn], memories: Sequence[MemoryUnit],
                    backend, names: Optional[Mapping[str, str]] = None,
                    main_speaker_name: str = "the main speaker",
                    session_ordinal: str = "third") -> list[tuple[int, int]]:
    """(turn index, memory index) pairs, both 0-based, parsed from
    letter-number lines ("A-3"); "none" means no references."""
    lettered = "\n".join(f"{chr(ord('A') + i)}. {line}"
                         for i, line in enumerate(_labelled(turns, names)))
    memory_list = "\n".join(f"{n}. {m.text}" for n, m in enumerate(memories, start=1))
    raw = backend.complete("memory_tagging", {
        "SESSION CONVERSATION": lettered,
        "MEMORY LIST": memory_list,
        "MAIN SPEAKER NAME": main_speaker_name,
        "SESSION ORDINAL": session_ordinal,
    })
    if raw.strip().lower() == "none":
        return []
    pairs: list[tuple[int, int]] = []
    for line_no, line in enumerate(raw.splitlines()):
        if not line.strip():
            continue
        match = _REF_LINE_RE.match(line)
        if not match:
            raise BadLineError(f"line {line_no}: {line!r}")
        letter, number = match.group(1).upper(), int(match.group(2))
        turn_index = ord(letter) - ord("A")
        if turn_index >= len(turns):
            raise BadLetterError(f"utterance letter {letter} beyond transcript")
        memory_index = number - 1
        if not 0 <= memory_index < len(memories):
            raise BadNumberError(f"memory number {number} outside 1..{len(memories)}")
        pairs.append((turn_index, memory_index))
    return pairs


def apply_memory_tags(session: Session, pairs: Sequence[tuple[int, int]],
                      memories: Sequence[MemoryUnit]) -> Session:
    """Write memory references onto turns, preserving listed order."""
    refs: dict[int, list[str]] = {}
    for turn_index, memory_index in pairs:
        refs.setdefault(turn_index, []).append(memories[memory_index].id)
    turns = tuple(
        Turn(index=t.index, speaker=t.speaker, text=t.text, introduces=t.introduces,
             memory_refs=tuple(refs.get(t.index, ())) or t.memory_refs)
        for t in session.turns
    )
    return Session(index=session.index, main_speaker=session.main_speaker,
                   partners=session.partners, modality_slots=session.modality_slots,
                   turns=turns)
