"""Runs multi-party, multi-session episodes.

Per turn: every participant bids for the floor, the highest probability
wins (main speaker as fallback), the winner may request a memory retrieval
([RET_IMG]/[RET_AUDIO]), and its utterance is generated with the retrieved
unit plus linked expansion in context. The main speaker decides at each
turn whether the next modality item appears; if nothing has appeared by the
fifth turn, insertion happens at a seeded random later turn drawn from a
dedicated stream. At session close, summaries become text memories, the two
modality items become modality memories, and a judged candidate sweep forms
links — at storage time, not retrieval time.

Everything here is deterministic for a fixed seed and deterministic
backends; episode replays are bit-reproducible.
"""

from __future__ import annotations

from collections.abc import Mapping as MappingABC
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence, Union

from .backends.base import AgentBackend, Embedder, TurnBid, TurnContext
from .errors import (
    BackendProtocolError,
    BadPrefixLengthError,
    EmptyParticipantsError,
    EpisodeAbortedError,
    SessionIncompleteError,
    SlotsExhaustedError,
    TimeoutError_,
    TransportError,
)
from .memory import MemoryGraph, normalize_summary_delimiters, parse_summary
from .model import (
    Episode,
    MemoryUnit,
    ModalityItem,
    MIN_TURNS_PER_SESSION,
    Scenario,
    Session,
    Turn,
)
from .retrieval import RetrievalResult, encode_context, retrieve_top1
from .rng import SplitMix64

DEFAULT_HORIZON = 16
FALLBACK_DRAW_AFTER = 5  # "by the fifth turn": checked at 0-based index 5

Backends = Union[AgentBackend, Mapping[str, AgentBackend]]
Observer = Optional[Callable[[str, dict], None]]


def backend_for(backends: Backends, speaker: str) -> AgentBackend:
    if isinstance(backends, MappingABC):
        return backends[speaker]
    return backends


@dataclass
class LinkCandidatePolicy:
    """Caps the judged link sweep at session close. Candidates are the new
    text memories crossed with (current-session modality memories + the
    owner's prior-session memories), newest memory first, most recent
    candidate first."""

    max_pairs_per_session: int = 64

    def __post_init__(self):
        if self.max_pairs_per_session < 0:
            raise ValueError("max_pairs_per_session must be >= 0")


@dataclass
class SessionState:
    """Mutable per-session scheduling state."""

    session_index: int
    horizon: int
    rng: SplitMix64
    introduced_count: int = 0
    pending_insertion_turn: Optional[int] = None

    def slots_remaining(self) -> int:
        return 2 - self.introduced_count


def arbitrate_turn(bids: Sequence[tuple[str, TurnBid]], main_speaker: str) -> str:
    """The willing bidder with the highest probability takes the turn; ties
    go to the lexicographically smallest speaker id; nobody wants it —
    the main speaker speaks."""
    if not bids:
        raise EmptyParticipantsError("no bids to arbitrate")
    wanting = [(speaker, bid.probability) for speaker, bid in bids if bid.wants_turn]
    if not wanting:
        return main_speaker
    wanting.sort(key=lambda pair: (-pair[1], pair[0]))
    return wanting[0][0]


def schedule_modality(state: SessionState, turn_index: int,
                      main_decision: bool) -> Optional[int]:
    """Decide whether a modality slot is introduced at this turn.

    Returns the slot index (0 or 1) to emit, or None. The main speaker's
    decision wins while slots remain. Failing that, if nothing has appeared
    by turn index 5, a pending insertion turn is drawn uniformly from
    {6 .. horizon-2} on a dedicated stream — the cap leaves the final turn
    free so the second slot still fits. A deadline guard force-introduces
    outstanding slots when exactly as many turns as slots remain, so both
    slots always land before close.
    """
    if main_decision:
        if state.introduced_count >= 2:
            raise SlotsExhaustedError("both modality slots already introduced")
        return _emit(state)

    if state.slots_remaining() == 0:
        return None

    if state.slots_remaining() >= state.horizon - turn_index:
        return _emit(state)  # deadline: second slot forced at horizon-1

    if (turn_index == FALLBACK_DRAW_AFTER and state.introduced_count == 0
            and state.pending_insertion_turn is None):
        state.pending_insertion_turn = state.rng.next_int(
            FALLBACK_DRAW_AFTER + 1, state.horizon - 2)

    if state.pending_insertion_turn == turn_index:
        return _emit(state)
    return None


def _emit(state: SessionState) -> int:
    slot = state.introduced_count
    state.introduced_count += 1
    return slot


def _retrieval_payload(session_index, turn_index, speaker, kind,
                       result: "RetrievalResult", phase: Optional[str] = None) -> dict:
    expansion = sorted(result.expansion, key=lambda u: u.id)
    payload = {
        "session_index": session_index,
        "turn_index": turn_index,
        "speaker": speaker,
        "kind": kind,
        "unit": {"id": result.unit.id, "kind": result.unit.kind,
                 "text": result.unit.text},
        "score": result.score,
        "linked": [{"id": u.id, "kind": u.kind, "text": u.text} for u in expansion],
    }
    if phase is not None:
        payload["phase"] = phase
    return payload


class SessionRunner:
    """Advances one session turn by turn. One logical thread per session;
    bid collection is sequential here (fan-out is allowed but not needed
    for deterministic backends)."""

    def __init__(
        self,
        scenario: Scenario,
        session_index: int,
        graph: MemoryGraph,
        embedder: Embedder,
        backends: Backends,
        seed: int,
        *,
        episode_id: str,
        horizon: int = DEFAULT_HORIZON,
        prior_sessions: tuple[Session, ...] = (),
        link_depth: int = 1,
        observer: Observer = None,
        opening_recall: bool = True,
    ):
        if horizon < MIN_TURNS_PER_SESSION:
            raise ValueError(f"horizon must be >= {MIN_TURNS_PER_SESSION}")
        self.scenario = scenario
        self.session_index = session_index
        self.plan = scenario.session_plans[session_index]
        self.graph = graph
        self.embedder = embedder
        self.backends = backends
        self.episode_id = episode_id
        self.horizon = horizon
        self.link_depth = link_depth
        self.observer = observer
        self.items: dict[str, ModalityItem] = {i.id: i for i in scenario.items}

        self.turns: list[Turn] = []
        self.perceived: list[tuple[str, str]] = []
        self.recalled: tuple[str, ...] = ()
        self.state = SessionState(
            session_index=session_index,
            horizon=horizon,
            rng=SplitMix64(seed).stream(f"modality/s{session_index}"),
        )
        if opening_recall and session_index >= 1 and prior_sessions:
            self._recall_opening(prior_sessions[-1])

    # --- context plumbing ---

    @property
    def participants(self) -> tuple[str, ...]:
        return (self.scenario.main,) + self.plan.partners

    def _emit_event(self, kind: str, payload: dict) -> None:
        if self.observer is not None:
            self.observer(kind, payload)

    def context_for(self, speaker: str, turn_index: Optional[int] = None) -> TurnContext:
        scenario = self.scenario
        interval = None
        if self.session_index >= 1:
            interval = scenario.intervals[self.session_index - 1].phrase
        return TurnContext(
            episode_id=self.episode_id,
            session_index=self.session_index,
            turn_index=len(self.turns) if turn_index is None else turn_index,
            speaker=speaker,
            main_speaker=scenario.main,
            participants=self.participants,
            speaker_names=tuple((p.id, p.name) for p in scenario.speakers),
            relationships=tuple((p.id, p.relationship) for p in scenario.speakers),
            turns=tuple((t.speaker, t.text) for t in self.turns),
            perceived=tuple(self.perceived),
            recalled=self.recalled,
            interval=interval,
        )

    def _recall_opening(self, previous: Session) -> None:
        """One kind=text retrieval for the main speaker against the previous
        session's context, injected into the opening context."""
        context = encode_context(
            self.embedder,
            [(t.speaker, t.text) for t in previous.turns],
            [(self.items[i].kind, self.items[i].caption)
             for i in previous.modality_slots if i in self.items],
        )
        result = retrieve_top1(context, self.graph, self.scenario.main, "text",
                               self.embedder, depth=self.link_depth, items=self.items)
        if result is None:
            return
        expansion = sorted(result.expansion, key=lambda u: u.id)
        self.recalled = (result.unit.text,) + tuple(u.text for u in expansion)
        self._emit_event("retrieval", _retrieval_payload(
            self.session_index, None, self.scenario.main, "text", result,
            phase="session_open"))

    # --- turn loop ---

    def run_turn(self) -> Turn:
        turn_index = len(self.turns)
        if turn_index >= self.horizon:
            raise SessionIncompleteError("session horizon reached")

        main = self.scenario.main
        main_decision = False
        if self.state.slots_remaining() > 0:
            main_decision = bool(
                backend_for(self.backends, main).decide_modality(self.context_for(main)))
        slot = schedule_modality(self.state, turn_index, main_decision)
        introduces = None
        if slot is not None:
            introduces = self.plan.modality_slots[slot]
            item = self.items[introduces]
            self.perceived.append((item.kind, item.caption))
            self._emit_event("modality", {
                "session_index": self.session_index,
                "turn_index": turn_index,
                "slot": slot,
                "item": {"id": item.id, "kind": item.kind, "caption": item.caption,
                         "asset_uri": item.asset_uri},
            })

        bids = [
            (speaker, backend_for(self.backends, speaker).decide_turn(self.context_for(speaker)))
            for speaker in self.participants
        ]
        speaker = arbitrate_turn(bids, main)
        backend = backend_for(self.backends, speaker)

        decision = backend.decide_retrieval(self.context_for(speaker))
        result: Optional[RetrievalResult] = None
        if decision.kind is not None:
            context = encode_context(
                self.embedder, [(t.speaker, t.text) for t in self.turns], self.perceived)
            result = retrieve_top1(context, self.graph, speaker, decision.kind,
                                   self.embedder, depth=self.link_depth, items=self.items)
            if result is not None:  # an empty store is not an error
                self._emit_event("retrieval", _retrieval_payload(
                    self.session_index, turn_index, speaker, decision.kind, result))

        text = backend.generate_utterance(self.context_for(speaker), result)
        turn = Turn(
            index=turn_index,
            speaker=speaker,
            text=text,
            introduces=introduces,
            memory_refs=result.ref_ids if result is not None else (),
        )
        self.turns.append(turn)
        self._emit_event("turn", {
            "session_index": self.session_index,
            "index": turn.index,
            "speaker": turn.speaker,
            "text": turn.text,
            "introduces": turn.introduces,
            "memory_refs": list(turn.memory_refs),
        })
        return turn

    def run_to_horizon(self) -> Session:
        while len(self.turns) < self.horizon:
            self.run_turn()
        return self.build_session()

    def build_session(self) -> Session:
        return Session(
            index=self.session_index,
            main_speaker=self.scenario.main,
            partners=self.plan.partners,
            modality_slots=self.plan.modality_slots,
            turns=tuple(self.turns),
        )


def close_session(
    episode: Episode,
    session_index: int,
    backends: Backends,
    graph: MemoryGraph,
    policy: Optional[LinkCandidatePolicy],
    owners: Sequence[str],
    items: Mapping[str, ModalityItem],
    observer: Observer = None,
) -> tuple[list[str], list[tuple[str, str]]]:
    """Summarize the session into each owner's memory and judge links.

    Per owner: the summary parses into text units, each modality slot
    becomes a modality unit, then candidate pairs (new text memories x
    current modality memories + prior memories) are judged newest-first
    until the policy cap, and links are added for positive verdicts.
    Returns (created unit ids, created link pairs).
    """
    policy = policy or LinkCandidatePolicy()
    session = episode.sessions[session_index]
    if len(session.turns) < MIN_TURNS_PER_SESSION:
        raise SessionIncompleteError(
            f"session has {len(session.turns)} turns, needs {MIN_TURNS_PER_SESSION}")
    introduced = {t.introduces for t in session.turns if t.introduces is not None}
    if introduced != set(session.modality_slots):
        raise SessionIncompleteError("both modality slots must be introduced before close")

    names = {p.id: p.name for p in episode.speakers}
    transcript = "\n".join(
        f"[{names.get(t.speaker, t.speaker)}] {t.text}" for t in session.turns)

    created_ids: list[str] = []
    created_links: list[tuple[str, str]] = []
    for owner in owners:
        backend = backend_for(backends, owner)
        prior = [u for u in graph.units_for_owner(owner)
                 if u.session_of_origin < session_index]

        raw = backend.summarize(transcript, names.get(owner, owner))
        text_units = parse_summary(
            normalize_summary_delimiters(raw), owner, session_index)
        for unit in text_units:
            graph.add_unit(unit)
            created_ids.append(unit.id)

        modality_units: list[MemoryUnit] = []
        for slot_index, item_id in enumerate(session.modality_slots):
            item = items[item_id]
            unit = MemoryUnit(
                id=f"{owner}.s{session_index}.{item.kind}{slot_index}",
                owner=owner,
                session_of_origin=session_index,
                kind=item.kind,
                text=item.caption,
                modality_ref=item.id,
            )
            graph.add_unit(unit)
            created_ids.append(unit.id)
            modality_units.append(unit)

        # newest memory first, most recent candidate first
        new_memories = sorted(text_units, key=lambda u: -graph.added_order(u.id))
        candidates = sorted(modality_units + prior, key=lambda u: -graph.added_order(u.id))
        budget = policy.max_pairs_per_session
        owner_links: list[tuple[str, str]] = []
        for memory in new_memories:
            if budget <= 0:
                break
            for candidate in candidates:
                if budget <= 0:
                    break
                budget -= 1
                if backend.judge_link(memory.text, candidate.text):
                    link = graph.add_link(memory.id, candidate.id)
                    owner_links.append((link.a, link.b))
        created_links.extend(owner_links)

        if observer is not None:
            observer("memory_written", {
                "session_index": session_index,
                "owner": owner,
                "units": [u.id for u in text_units] + [u.id for u in modality_units],
                "links": [list(pair) for pair in owner_links],
            })
    return created_ids, created_links


def run_episode(
    scenario: Scenario,
    backends: Backends,
    embedder: Embedder,
    seed: int,
    *,
    horizon: int = DEFAULT_HORIZON,
    policy: Optional[LinkCandidatePolicy] = None,
    summary_owners: str = "main",
    link_depth: int = 1,
    episode_id: Optional[str] = None,
    observer: Observer = None,
) -> tuple[Episode, MemoryGraph]:
    """Run all three sessions of a scenario and return the finished episode
    with its memory graph.

    ``summary_owners``: "main" summarizes only the main speaker's
    perspective (dataset parity); "participants" widens to every session
    participant. On a backend failure the partial episode travels inside
    EpisodeAbortedError so callers can persist it with status=aborted.
    """
    if summary_owners not in ("main", "participants"):
        raise ValueError("summary_owners must be 'main' or 'participants'")
    graph = MemoryGraph()
    episode_id = episode_id or scenario.id or f"ep-{seed & 0xFFFFFFFF:08x}"
    items = {i.id: i for i in scenario.items}
    sessions: list[Session] = []
    runner: Optional[SessionRunner] = None

    def partial() -> Episode:
        done = tuple(sessions)
        if runner is not None and runner.turns and len(done) <= runner.session_index:
            done = done + (runner.build_session(),)
        return Episode(id=episode_id, speakers=scenario.speakers, main_speaker=scenario.main,
                       sessions=done, intervals=scenario.intervals)

    try:
        for session_index in range(len(scenario.session_plans)):
            runner = SessionRunner(
                scenario, session_index, graph, embedder, backends, seed,
                episode_id=episode_id, horizon=horizon,
                prior_sessions=tuple(sessions), link_depth=link_depth,
                observer=observer,
            )
            if observer is not None:
                observer("session_opened", {
                    "episode_id": episode_id,
                    "session_index": session_index,
                    "participants": list(runner.participants),
                    "horizon": horizon,
                })
            sessions.append(runner.run_to_horizon())

            episode_so_far = Episode(
                id=episode_id, speakers=scenario.speakers, main_speaker=scenario.main,
                sessions=tuple(sessions), intervals=scenario.intervals)
            owners = ([scenario.main] if summary_owners == "main"
                      else list(sessions[session_index].participants))
            close_session(episode_so_far, session_index, backends, graph,
                          policy, owners, items, observer)
            if observer is not None:
                observer("session_closed", {
                    "session_index": session_index,
                    "turn_count": len(sessions[session_index].turns),
                })
    except (TransportError, TimeoutError_, BackendProtocolError) as err:
        raise EpisodeAbortedError(err, partial(), graph) from err

    episode = Episode(id=episode_id, speakers=scenario.speakers,
                      main_speaker=scenario.main, sessions=tuple(sessions),
                      intervals=scenario.intervals)
    return episode, graph


def predict_next_speaker(
    prefix: Sequence[Turn],
    participants: Sequence[str],
    main_speaker: str,
    backends: Backends,
    *,
    episode_id: str = "probe",
    session_index: int = 0,
    speaker_names: Sequence[tuple[str, str]] = (),
) -> str:
    """Who naturally responds after six exchanged turns: collect bids over
    the prefix and arbitrate."""
    if len(prefix) != 6:
        raise BadPrefixLengthError(f"prefix must be exactly 6 turns, got {len(prefix)}")
    turns = tuple((t.speaker, t.text) for t in prefix)
    names = tuple(speaker_names) or tuple((p, p) for p in participants)
    bids = []
    for speaker in participants:
        context = TurnContext(
            episode_id=episode_id,
            session_index=session_index,
            turn_index=6,
            speaker=speaker,
            main_speaker=main_speaker,
            participants=tuple(participants),
            speaker_names=names,
            relationships=tuple((p, "") for p in participants),
            turns=turns,
        )
        bids.append((speaker, backend_for(backends, speaker).decide_turn(context)))
    return arbitrate_turn(bids, main_speaker)
