"""Seeded rule-based backend.

Plays every protocol surface an agent or the dataset pipeline needs —
turn bids, retrieval tokens, utterances, summaries, link judgments, and the
raw pipeline prompts — without any model. Every decision is a pure function
of (inputs, seed): streams are derived from content hashes, never from call
order, so parallel fan-out and re-runs replay identically.
"""

from __future__ import annotations

import re
from collections import Counter

from ..rng import SplitMix64, fnv1a64
from .base import (
    AgentBackend,
    RetrievalDecision,
    TurnBid,
    TurnContext,
    NO_RETRIEVAL,
)

_WORD_RE = re.compile(r"[a-z]{4,}")
_NAME_LINE_RE = re.compile(r"^\[([^\]]+)\]\s*(.*)$")

_STOPWORDS = {
    "about", "after", "again", "along", "around", "because", "before", "being",
    "could", "every", "first", "going", "great", "having", "really", "right",
    "should", "something", "their", "there", "these", "thing", "think", "those",
    "today", "watch", "where", "which", "while", "would", "point",
}

NAME_POOL = (
    "Alex", "Jamie", "Taylor", "Morgan", "Riley", "Casey",
    "Jordan", "Sam", "Quinn", "Avery", "Parker", "Reese",
)
RELATIONSHIP_POOL = ("friend", "colleague", "neighbor", "cousin", "classmate", "teammate")

_INTERVAL_PHRASES = (
    "a few hours later", "a few days later", "a few weeks later",
    "a few months later", "a couple of years later",
)

_LOCATION_WORDS = (
    "kitchen", "office", "beach", "park", "street", "forest",
    "harbor", "stadium", "market", "museum", "station", "garden",
)

_CHATTER = (
    "I was just thinking about the {w} — it never gets old.",
    "Do you think the {w} will stay like this all day?",
    "Honestly, the {w} here beats anything we saw last time.",
    "We should make a habit of this. The {w} alone is worth it.",
    "Careful though, the {w} can surprise you.",
    "That {w} is exactly what I needed today.",
    "Someone should write down how good this {w} is.",
    "I'd trade a quiet weekend for this {w} any time.",
)


def _topic_words(*texts: str) -> list[str]:
    counts = Counter()
    for text in texts:
        for word in _WORD_RE.findall(text.lower()):
            if word not in _STOPWORDS:
                counts[word] += 1
    # frequency desc, then alphabetical: deterministic
    return [w for w, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))]


def _speakers_in_transcript(transcript: str) -> list[str]:
    seen = []
    for line in transcript.splitlines():
        match = _NAME_LINE_RE.match(line.strip())
        if match and match.group(1) not in seen:
            seen.append(match.group(1))
    return seen


class SimulatedBackend(AgentBackend):
    """Deterministic stand-in for a conversational model."""

    def __init__(self, seed: int, retrieval_rate: float = 0.35,
                 volunteer_rate: float = 0.25):
        self.seed = seed
        self.retrieval_rate = retrieval_rate
        self.volunteer_rate = volunteer_rate

    def _stream(self, label: str, *content: str) -> SplitMix64:
        mixed = fnv1a64("\x1f".join(content).encode("utf-8"))
        return SplitMix64(self.seed).stream(f"{label}/{mixed:016x}")

    def _ctx_stream(self, op: str, context: TurnContext) -> SplitMix64:
        return self._stream(
            op, context.episode_id, str(context.session_index),
            str(context.turn_index), context.speaker)

    # --- agent protocol ---

    def decide_turn(self, context: TurnContext) -> TurnBid:
        rng = self._ctx_stream("bid", context)
        last_speaker = context.turns[-1][0] if context.turns else None
        eagerness = 0.15 if context.speaker == last_speaker else 0.75
        if rng.next_float() > eagerness:
            return TurnBid(wants_turn=False)
        return TurnBid(wants_turn=True, probability=round(rng.next_float(), 6))

    def decide_retrieval(self, context: TurnContext) -> RetrievalDecision:
        if context.session_index == 0:
            return NO_RETRIEVAL
        rng = self._ctx_stream("ret", context)
        if rng.next_float() < self.retrieval_rate:
            return RetrievalDecision("RET_IMG" if rng.next_float() < 0.5 else "RET_AUDIO")
        return NO_RETRIEVAL

    def decide_modality(self, context: TurnContext) -> bool:
        if context.turn_index == 0:
            return False
        rng = self._ctx_stream("mod", context)
        return rng.next_float() < self.volunteer_rate

    def generate_utterance(self, context: TurnContext, retrieved=None) -> str:
        rng = self._ctx_stream("utt", context)
        if retrieved is not None:
            line = f"You know, this reminds me of something: {retrieved.unit.text.rstrip('.')}."
            if retrieved.expansion:
                line += " It's all connected for me."
            return line
        if context.perceived:
            kind, caption = context.perceived[-1]
            mentioned = any(caption in text for _, text in context.turns)
            if not mentioned:
                verb = "Look at that" if kind == "image" else "Listen to that"
                return f"{verb} — {caption.rstrip('.')}, right here with us."
        words = _topic_words(*[t for _, t in context.turns],
                             *[c for _, c in context.perceived]) or ["view"]
        template = _CHATTER[rng.next_below(len(_CHATTER))]
        return template.format(w=words[rng.next_below(min(3, len(words)))])

    def summarize(self, transcript: str, perspective: str) -> str:
        lines = [l for l in transcript.splitlines() if l.strip()]
        if not lines:
            return "no memory"
        words = _topic_words(transcript) or ["outing"]
        others = [n for n in _speakers_in_transcript(transcript) if n != perspective]
        fragments = [f"I keep thinking about the {words[0]} we shared (about me)"]
        for i, name in enumerate(others[:2]):
            word = words[min(i + 1, len(words) - 1)]
            fragments.append(f"{name} had a lot to say about the {word} (about {name})")
        return " <sep> ".join(fragments)

    def judge_link(self, memory_a: str, memory_b: str) -> bool:
        tokens_a = {w for w in _WORD_RE.findall(memory_a.lower())
                    if len(w) >= 5 and w not in _STOPWORDS}
        tokens_b = {w for w in _WORD_RE.findall(memory_b.lower())
                    if len(w) >= 5 and w not in _STOPWORDS}
        return bool(tokens_a & tokens_b)

    def judge_yes_no(self, question: str, material: str) -> bool:
        return True

    # --- pipeline prompt protocol ---

    def complete(self, prompt_id: str, substitutions: dict) -> str:
        handler = getattr(self, f"_complete_{prompt_id}", None)
        if handler is None:
            raise ValueError(f"simulated backend cannot complete prompt {prompt_id!r}")
        return handler(substitutions)

    def _complete_caption_refine(self, subs: dict) -> str:
        return subs["CAPTION"].strip()

    def _locate(self, caption: str, fallback: str) -> str:
        tokens = set(_WORD_RE.findall(caption.lower()))
        for word in _LOCATION_WORDS:
            if word in tokens:
                return word
        return fallback

    def _complete_location_image(self, subs: dict) -> str:
        return self._locate(subs["CAPTION"], "outdoors")

    def _complete_location_audio(self, subs: dict) -> str:
        return self._locate(subs["CAPTION"], "none")

    def _complete_scenario(self, subs: dict) -> str:
        listing = [l for l in subs["MODALITY LIST"].splitlines() if l.strip()]
        rng = self._stream("scenario", subs["MODALITY LIST"], str(subs.get("ATTEMPT", 0)))
        names = list(NAME_POOL)
        rng.shuffle(names)
        names = names[:4]
        relationships = [RELATIONSHIP_POOL[rng.next_below(len(RELATIONSHIP_POOL))]
                         for _ in range(4)]
        scene_numbers = list(range(1, len(listing) + 1))
        rng.shuffle(scene_numbers)
        scenes = scene_numbers[:6]
        pairs = ((names[1], names[2]), (names[1], names[3]), (names[2], names[3]))
        intervals = [_INTERVAL_PHRASES[rng.next_below(len(_INTERVAL_PHRASES))]
                     for _ in range(2)]
        out = [
            f"- Main speaker name: {names[0]}",
            f"- Main speaker relationship: {relationships[0]}",
        ]
        for i in range(1, 4):
            out.append(f"- Partner {i} name: {names[i]}")
            out.append(f"- Partner {i} relationship: {relationships[i]}")
        for s in range(3):
            out.append(f"- Scene numbers for session {s + 1}: "
                       f"{scenes[2 * s]}, {scenes[2 * s + 1]}")
            out.append(f"- Two partners' names in Scene {s + 1}: "
                       f"{pairs[s][0]}, {pairs[s][1]}")
            if s < 2:
                out.append(f"- Time interval between session {s + 1} and {s + 2}: "
                           f"{intervals[s]}")
        return "\n".join(out)

    def _complete_session_generation(self, subs: dict) -> str:
        captions = (subs["CAPTION 1"], subs["CAPTION 2"])
        speakers = (subs["MAIN SPEAKER NAME"], subs["PARTNER 1 NAME"], subs["PARTNER 2 NAME"])
        rng = self._stream("session", *captions, *speakers, subs.get("SESSION ORDINAL", ""))
        n_turns = 10 + rng.next_below(5)
        first_at = 1 + rng.next_below(3)             # 1-based utterance 1..3
        second_at = 6 + rng.next_below(min(3, n_turns - 6))
        words = _topic_words(*captions) or ["scene"]
        lines = []
        speaker_idx = 1 + rng.next_below(2)          # a partner opens
        for i in range(1, n_turns + 1):
            speaker = speakers[speaker_idx % 3]
            if i == first_at:
                text = f"Look — {captions[0].rstrip('.')}, right in front of us!"
            elif i == second_at:
                text = f"And listen — {captions[1].rstrip('.')}. Incredible timing."
            else:
                template = _CHATTER[rng.next_below(len(_CHATTER))]
                text = template.format(w=words[rng.next_below(min(3, len(words)))])
            lines.append(f"[{speaker}] {text}")
            speaker_idx += 1 + rng.next_below(2)     # never the same speaker twice
        return "\n".join(lines)

    def _complete_modality_tagging(self, subs: dict) -> str:
        utterances = [l for l in subs["UTTERANCE LIST"].splitlines() if l.strip()]
        positions = []
        for caption in (subs["CAPTION A"], subs["CAPTION B"]):
            needle = caption.rstrip(".").lower()[:30]
            found = 0
            for number, line in enumerate(utterances, start=1):
                if needle in line.lower() and number not in positions:
                    found = number
                    break
            if not found:  # fall back to the first untaken utterance
                taken = set(positions)
                found = next(n for n in range(1, len(utterances) + 1) if n not in taken)
            positions.append(found)
        return f"Settings at utterance {positions[0]} and {positions[1]}"

    def _complete_memory_tagging(self, subs: dict) -> str:
        utterances = [l for l in subs["SESSION CONVERSATION"].splitlines() if l.strip()]
        memories = [l for l in subs["MEMORY LIST"].splitlines() if l.strip()]
        out = []
        for number, memory in enumerate(memories, start=1):
            tokens = {w for w in _WORD_RE.findall(memory.lower()) if len(w) >= 5}
            for index, line in enumerate(utterances[:26]):
                line_tokens = {w for w in _WORD_RE.findall(line.lower()) if len(w) >= 5}
                if tokens & line_tokens:
                    out.append(f"{chr(ord('A') + index)}-{number}")
                    break
            if len(out) >= 3:
                break
        return "\n".join(out) if out else "none"
