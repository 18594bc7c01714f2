"""Fixture-driven backends for tests and golden replays.

A ScriptedBackend replays a plain-dict script keyed by
(session, turn, speaker), so a single instance can play every seat in an
episode. Scripts are JSON-friendly: all keys are "<session>/<turn>/<speaker>"
strings (see ``key``).
"""

from __future__ import annotations

from ..errors import BackendProtocolError
from ..rng import SplitMix64
from .base import (
    AgentBackend,
    RetrievalDecision,
    TurnBid,
    TurnContext,
    NO_RETRIEVAL,
)


def key(session: int, turn: int, speaker: str) -> str:
    return f"{session}/{turn}/{speaker}"


class ScriptedBackend(AgentBackend):
    """Replays a script dict. Recognized entries (all optional):

    bids:        {"s/t/speaker": prob}        float = wants turn, null = declines
    retrieval:   {"s/t/speaker": "RET_IMG"|"RET_AUDIO"|"NO_RET"}
    utterances:  {"s/t/speaker": text}
    modality:    {"s/t": true}                main speaker volunteers a slot
    summaries:   {speaker: [text, ...]}       consumed in order per perspective
    links:       [[text_a, text_b], ...]      pairs judged related; others not
    yes_no:      [{"contains"?, "question"?, "material"?: str,
                   "answer": bool}, ...]      first rule whose conditions all
                                              hold wins; default yes
    completions: {prompt_id: [text, ...]}     consumed in order per prompt

    Missing entries fall back to: no bid, NO_RET, "..." utterance, no
    volunteering, "no memory", unrelated, and yes — unless strict=True,
    where a missing bid/utterance/summary raises instead (catching fixture
    gaps in golden replays).
    """

    def __init__(self, script: dict, strict: bool = False):
        self.script = script
        self.strict = strict
        self._summary_cursor: dict[str, int] = {}
        self._completion_cursor: dict[str, int] = {}

    def _lookup(self, table: str, k: str):
        return self.script.get(table, {}).get(k)

    def _missing(self, what: str, k: str):
        if self.strict:
            raise KeyError(f"script has no {what} for {k}")

    def decide_turn(self, context: TurnContext) -> TurnBid:
        k = key(context.session_index, context.turn_index, context.speaker)
        bids = self.script.get("bids", {})
        if k not in bids:
            self._missing("bid", k)
            return TurnBid(wants_turn=False)
        prob = bids[k]
        if prob is None:
            return TurnBid(wants_turn=False)
        return TurnBid(wants_turn=True, probability=float(prob))

    def decide_retrieval(self, context: TurnContext) -> RetrievalDecision:
        k = key(context.session_index, context.turn_index, context.speaker)
        token = self._lookup("retrieval", k)
        return RetrievalDecision(token) if token else NO_RETRIEVAL

    def generate_utterance(self, context: TurnContext, retrieved=None) -> str:
        k = key(context.session_index, context.turn_index, context.speaker)
        text = self._lookup("utterances", k)
        if text is None:
            self._missing("utterance", k)
            return "..."
        return text

    def decide_modality(self, context: TurnContext) -> bool:
        return bool(self._lookup("modality", f"{context.session_index}/{context.turn_index}"))

    def summarize(self, transcript: str, perspective: str) -> str:
        entries = self.script.get("summaries", {}).get(perspective)
        if entries is None:
            self._missing("summary", perspective)
            return "no memory"
        if isinstance(entries, str):
            return entries
        cursor = self._summary_cursor.get(perspective, 0)
        if cursor >= len(entries):
            self._missing("summary", f"{perspective}[{cursor}]")
            return "no memory"
        self._summary_cursor[perspective] = cursor + 1
        return entries[cursor]

    def judge_link(self, memory_a: str, memory_b: str) -> bool:
        for pair in self.script.get("links", ()):
            if {memory_a, memory_b} == set(pair):
                return True
        return False

    def judge_yes_no(self, question: str, material: str) -> bool:
        haystack = f"{question}\n{material}"
        for rule in self.script.get("yes_no", ()):
            if "contains" in rule and rule["contains"] not in haystack:
                continue
            if "question" in rule and rule["question"] not in question:
                continue
            if "material" in rule and rule["material"] not in material:
                continue
            return bool(rule["answer"])
        return True

    def complete(self, prompt_id: str, substitutions: dict) -> str:
        entries = self.script.get("completions", {}).get(prompt_id)
        if entries is None:
            raise BackendProtocolError(f"no scripted completions for {prompt_id!r}")
        if isinstance(entries, str):
            return entries
        cursor = self._completion_cursor.get(prompt_id, 0)
        if cursor >= len(entries):
            raise BackendProtocolError(f"scripted completions for {prompt_id!r} exhausted")
        self._completion_cursor[prompt_id] = cursor + 1
        return entries[cursor]


class RandomBidBackend(AgentBackend):
    """Bids an i.i.d. uniform probability on every turn; with symmetric
    participants the arbitration winner is uniform over them. Seeded and
    replayable; used to calibrate next-speaker evaluation."""

    def __init__(self, seed: int):
        self._seed = seed

    def _stream(self, context: TurnContext, op: str) -> SplitMix64:
        label = f"{op}/{context.episode_id}/{context.session_index}/{context.turn_index}/{context.speaker}"
        return SplitMix64(self._seed).stream(label)

    def decide_turn(self, context: TurnContext) -> TurnBid:
        return TurnBid(wants_turn=True, probability=self._stream(context, "bid").next_float())

    def decide_retrieval(self, context: TurnContext) -> RetrievalDecision:
        return NO_RETRIEVAL

    def generate_utterance(self, context: TurnContext, retrieved=None) -> str:
        return "Mm, go on."

    def summarize(self, transcript: str, perspective: str) -> str:
        return "no memory"

    def judge_link(self, memory_a: str, memory_b: str) -> bool:
        return False

    def judge_yes_no(self, question: str, material: str) -> bool:
        return True
