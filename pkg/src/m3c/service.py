"""HTTP service: episodes, live sessions, human seats, and event streams.

Each session owns an append-only event log with strictly increasing seq
numbers and a single writer (the session's orchestrator thread). Readers
stream over server-sent events (`id:` carries the seq, `data:` the JSON
payload); reconnecting with ?from=SEQ resumes after that seq without gaps.

A human seat is just another bidder: probability 1.0 when input is queued,
silent otherwise. When arbitration hands the human the floor with nothing
queued, the engine blocks with pending=true until a POST supplies the
utterance. Posting while an agent holds the floor (or into an agent-only
session) is NOT_YOUR_TURN; posting after close is SESSION_CLOSED.
"""

from __future__ import annotations

import json
import threading
import time
from collections import deque
from dataclasses import dataclass
from typing import Optional

import anyio.to_thread
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .backends import (
    AgentBackend,
    HashingEmbedder,
    RemoteBackend,
    RemoteConfig,
    ScriptedBackend,
    SimulatedBackend,
    TurnBid,
    TurnContext,
    NO_RETRIEVAL,
)
from .errors import (
    M3CError,
    NotYourTurnError,
    SessionClosedError,
    SessionIncompleteError,
    UnknownSessionError,
)
from .memory import MemoryGraph
from .model import (
    Episode,
    MIN_TURNS_PER_SESSION,
    Scenario,
    TimeInterval,
    episode_to_dict,
    scenario_from_dict,
)
from .orchestrator import DEFAULT_HORIZON, LinkCandidatePolicy, SessionRunner, close_session

STREAM_POLL_SECONDS = 0.2
POST_ACK_TIMEOUT_SECONDS = 10.0


class _StopSession(Exception):
    """Internal: the session was asked to stop while waiting."""


@dataclass
class _Ticket:
    text: str
    introduce: bool = False
    turn_index: Optional[int] = None  # set once the turn is appended


class HumanSeatBackend(AgentBackend):
    """Adapter that plays a human through the same bid interface as agents."""

    def __init__(self, session: "SessionRuntime"):
        self.session = session

    def decide_turn(self, context: TurnContext) -> TurnBid:
        with self.session.cond:
            if self.session.tickets:
                return TurnBid(wants_turn=True, probability=1.0)
        return TurnBid(wants_turn=False)

    def decide_retrieval(self, context: TurnContext):
        return NO_RETRIEVAL

    def decide_modality(self, context: TurnContext) -> bool:
        if not self.session.human_modality:
            return False
        with self.session.cond:
            return bool(self.session.tickets) and self.session.tickets[0].introduce

    def generate_utterance(self, context: TurnContext, retrieved=None) -> str:
        session = self.session
        with session.cond:
            while not session.tickets:
                session.pending = True
                session.cond.notify_all()
                session.cond.wait(timeout=STREAM_POLL_SECONDS)
                if session.stop_requested:
                    session.pending = False
                    raise _StopSession()
            session.pending = False
            ticket = session.tickets.popleft()
            session.active_ticket = ticket
            return ticket.text

    def summarize(self, transcript: str, perspective: str) -> str:
        return "no memory"

    def judge_link(self, memory_a: str, memory_b: str) -> bool:
        return False

    def judge_yes_no(self, question: str, material: str) -> bool:
        return True


class SessionRuntime:
    """One live session: runner thread, event log, human seat state."""

    def __init__(self, episode: "EpisodeRuntime", session_index: int,
                 human_modality: bool = False):
        self.episode = episode
        self.session_index = session_index
        self.id = f"{episode.id}-s{session_index}"
        self.human_modality = human_modality

        self.cond = threading.Condition()
        self.events: list[dict] = []
        self.status = "open"  # open | awaiting_close | closed | error
        self.pending = False
        self.stop_requested = False
        self.floor_busy = False
        self.tickets: deque[_Ticket] = deque()
        self.active_ticket: Optional[_Ticket] = None
        self.thread: Optional[threading.Thread] = None

        backends = episode.backend
        if episode.human_speaker is not None:
            backends = {speaker: episode.backend for speaker in episode.speaker_ids}
            backends[episode.human_speaker] = HumanSeatBackend(self)
        self.runner = SessionRunner(
            episode.scenario, session_index, episode.graph, episode.embedder,
            backends, episode.seed, episode_id=episode.id,
            horizon=episode.horizon, prior_sessions=tuple(episode.sessions),
            observer=self.emit,
        )

    # --- event log ---

    def emit(self, kind: str, payload: dict) -> None:
        with self.cond:
            self.events.append({"seq": len(self.events) + 1, "kind": kind,
                                "payload": payload})
            if kind == "turn" and self.active_ticket is not None:
                self.active_ticket.turn_index = payload["index"]
                self.active_ticket = None
            self.cond.notify_all()

    def events_after(self, seq: int) -> list[dict]:
        with self.cond:
            return list(self.events[seq:])

    # --- turn loop ---

    def start(self) -> None:
        self.emit("session_opened", {
            "episode_id": self.episode.id,
            "session_index": self.session_index,
            "participants": list(self.runner.participants),
            "horizon": self.episode.horizon,
        })
        self.thread = threading.Thread(target=self._run, daemon=True,
                                       name=f"session-{self.id}")
        self.thread.start()

    def _run(self) -> None:
        try:
            while len(self.runner.turns) < self.episode.horizon:
                with self.cond:
                    if self.stop_requested:
                        break
                    self.floor_busy = True
                try:
                    self.runner.run_turn()
                finally:
                    with self.cond:
                        self.floor_busy = False
                if self.episode.turn_delay:
                    time.sleep(self.episode.turn_delay)
        except _StopSession:
            pass
        except M3CError as err:
            self.emit("error", {"code": err.code, "message": str(err)})
            with self.cond:
                self.status = "error"
                self.cond.notify_all()
            return
        if self.episode.human_speaker is None:
            self.close()
        else:
            with self.cond:
                if self.status == "open" and not self.stop_requested:
                    self.status = "awaiting_close"
                self.cond.notify_all()

    # --- human seat ---

    def post_utterance(self, text: str, introduce: bool = False) -> int:
        with self.cond:
            if self.status in ("closed", "error"):
                raise SessionClosedError(f"session {self.id} is {self.status}")
            if self.episode.human_speaker is None:
                raise NotYourTurnError("session has no human seat")
            if self.floor_busy and not self.pending:
                raise NotYourTurnError("an agent holds the floor")
            if self.status == "awaiting_close":
                raise NotYourTurnError("session reached its horizon; close it")
            ticket = _Ticket(text=text, introduce=introduce)
            self.tickets.append(ticket)
            self.cond.notify_all()
            deadline = time.monotonic() + POST_ACK_TIMEOUT_SECONDS
            while ticket.turn_index is None:
                remaining = deadline - time.monotonic()
                if remaining <= 0 or self.status in ("closed", "error"):
                    raise NotYourTurnError("utterance was not taken up")
                self.cond.wait(timeout=min(remaining, STREAM_POLL_SECONDS))
            return ticket.turn_index

    # --- close ---

    def _check_complete(self) -> None:
        session = self.runner.build_session()
        introduced = {t.introduces for t in session.turns if t.introduces}
        if (len(session.turns) < MIN_TURNS_PER_SESSION
                or introduced != set(session.modality_slots)):
            raise SessionIncompleteError(
                f"session has {len(session.turns)} turns and "
                f"{len(introduced)} of 2 modality slots introduced")

    def close(self) -> dict:
        with self.cond:
            if self.status == "closed":
                raise SessionClosedError(f"session {self.id} already closed")
        # reject a premature close without disturbing the running engine
        self._check_complete()
        with self.cond:
            self.stop_requested = True
            self.cond.notify_all()
        if self.thread is not None and self.thread is not threading.current_thread():
            self.thread.join(timeout=POST_ACK_TIMEOUT_SECONDS)

        session = self.runner.build_session()
        episode_record = self.episode.record_session(session)
        owners = ([self.episode.scenario.main] if self.episode.summary_owners == "main"
                  else list(session.participants))
        unit_ids, links = close_session(
            episode_record, self.session_index, self.episode.backend,
            self.episode.graph, self.episode.policy, owners,
            {i.id: i for i in self.episode.scenario.items}, observer=self.emit)
        self.emit("session_closed", {
            "session_index": self.session_index,
            "turn_count": len(session.turns),
            "memories": len(unit_ids),
            "links": len(links),
        })
        with self.cond:
            self.status = "closed"
            self.cond.notify_all()
        return {"closed": True, "memories": len(unit_ids), "links": len(links)}


class EpisodeRuntime:
    """Episode-wide state shared by its sessions."""

    def __init__(self, scenario: Scenario, *, seed: int = 0,
                 horizon: int = DEFAULT_HORIZON, backend: AgentBackend,
                 embedder=None, human_speaker: Optional[str] = None,
                 turn_delay: float = 0.0, summary_owners: str = "main",
                 episode_id: Optional[str] = None):
        self.scenario = scenario
        self.seed = seed
        self.horizon = horizon
        self.backend = backend
        self.embedder = embedder or HashingEmbedder()
        self.human_speaker = human_speaker
        self.turn_delay = turn_delay
        self.summary_owners = summary_owners
        self.policy = LinkCandidatePolicy()
        self.id = episode_id or scenario.id or f"ep-{id(self):x}"
        self.graph = MemoryGraph()
        self.sessions = []  # closed Session records
        self.intervals = list(scenario.intervals)
        self.session_runtimes: list[SessionRuntime] = []
        self.lock = threading.Lock()

        if human_speaker is not None and human_speaker not in self.speaker_ids:
            raise ValueError(f"human speaker {human_speaker!r} is not in the scenario")

    @property
    def speaker_ids(self) -> list[str]:
        return [p.id for p in self.scenario.speakers]

    def open_next_session(self, interval: Optional[str] = None,
                          human_modality: bool = False) -> SessionRuntime:
        with self.lock:
            index = len(self.session_runtimes)
            if index >= len(self.scenario.session_plans):
                raise SessionClosedError("all sessions already opened")
            if index > 0 and self.session_runtimes[-1].status != "closed":
                raise SessionIncompleteError("previous session is not closed")
            if index > 0 and interval:
                self.intervals[index - 1] = TimeInterval(interval)
            runtime = SessionRuntime(self, index, human_modality=human_modality)
            self.session_runtimes.append(runtime)
        runtime.start()
        return runtime

    def record_session(self, session) -> Episode:
        if len(self.sessions) == session.index:
            self.sessions.append(session)
        else:
            self.sessions[session.index] = session
        return self.episode_record()

    def episode_record(self) -> Episode:
        """The persisted episode: closed sessions plus the open session's
        turns so far."""
        sessions = list(self.sessions)
        for runtime in self.session_runtimes[len(sessions):]:
            if runtime.runner.turns:
                sessions.append(runtime.runner.build_session())
        return Episode(
            id=self.id,
            speakers=self.scenario.speakers,
            main_speaker=self.scenario.main,
            sessions=tuple(sessions),
            intervals=tuple(self.intervals),
        )


def _build_backend(spec: Optional[dict], seed: int) -> AgentBackend:
    spec = spec or {"type": "simulated"}
    kind = spec.get("type", "simulated")
    if kind == "simulated":
        return SimulatedBackend(seed=spec.get("seed", seed))
    if kind == "scripted":
        return ScriptedBackend(spec.get("script", {}))
    if kind == "remote":
        return RemoteBackend(RemoteConfig.from_file(spec["config"]))
    raise ValueError(f"unknown backend type: {kind}")


def _sse(event: dict) -> str:
    body = json.dumps({"seq": event["seq"], "kind": event["kind"],
                       "payload": event["payload"]}, ensure_ascii=False)
    return f"id: {event['seq']}\ndata: {body}\n\n"


_HTTP_STATUS = {
    "UNKNOWN_SESSION": 404,
    "NOT_YOUR_TURN": 409,
    "SESSION_INCOMPLETE": 409,
    "SESSION_CLOSED": 410,
}


def create_app(turn_delay: float = 0.0, console_dir=None) -> FastAPI:
    app = FastAPI(title="m3c", docs_url=None, redoc_url=None)
    episodes: dict[str, EpisodeRuntime] = {}
    sessions: dict[str, SessionRuntime] = {}

    @app.exception_handler(M3CError)
    async def handle_engine_error(request: Request, err: M3CError):
        return JSONResponse(status_code=_HTTP_STATUS.get(err.code, 400),
                            content={"error": err.code, "message": str(err)})

    def _session(session_id: str) -> SessionRuntime:
        if session_id not in sessions:
            raise UnknownSessionError(f"unknown session: {session_id}")
        return sessions[session_id]

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/episodes")
    async def create_episode(body: dict):
        scenario = scenario_from_dict(body["scenario"])
        seed = int(body.get("seed", 0))
        runtime = EpisodeRuntime(
            scenario,
            seed=seed,
            horizon=int(body.get("horizon", DEFAULT_HORIZON)),
            backend=_build_backend(body.get("backend"), seed),
            human_speaker=body.get("human_speaker"),
            turn_delay=float(body.get("turn_delay_ms", turn_delay * 1000)) / 1000.0,
            summary_owners=body.get("summary_owners", "main"),
            episode_id=body.get("episode_id") or scenario.id,
        )
        episodes[runtime.id] = runtime
        return {"episode_id": runtime.id,
                "speakers": runtime.speaker_ids,
                "main_speaker": scenario.main}

    @app.post("/episodes/{episode_id}/sessions")
    async def open_session(episode_id: str, body: Optional[dict] = None):
        if episode_id not in episodes:
            raise UnknownSessionError(f"unknown episode: {episode_id}")
        body = body or {}
        runtime = episodes[episode_id].open_next_session(
            interval=body.get("interval"),
            human_modality=bool(body.get("human_modality", False)))
        sessions[runtime.id] = runtime
        return {"session_id": runtime.id, "session_index": runtime.session_index}

    @app.get("/sessions/{session_id}/events")
    async def stream_events(session_id: str, request: Request):
        runtime = _session(session_id)
        try:
            from_seq = int(request.query_params.get("from", 0))
        except ValueError:
            from_seq = 0

        def generate():
            last = from_seq
            while True:
                batch = runtime.events_after(last)
                for event in batch:
                    yield _sse(event)
                    last = event["seq"]
                with runtime.cond:
                    finished = runtime.status in ("closed", "error")
                    drained = len(runtime.events) <= last
                    if finished and drained:
                        return
                    if drained:
                        runtime.cond.wait(timeout=STREAM_POLL_SECONDS)

        return StreamingResponse(generate(), media_type="text/event-stream")

    @app.post("/sessions/{session_id}/utterances")
    async def post_utterance(session_id: str, body: dict):
        runtime = _session(session_id)
        text = (body.get("text") or "").strip()
        if not text:
            raise NotYourTurnError("utterance text must be non-empty")
        turn_index = await anyio.to_thread.run_sync(
            runtime.post_utterance, text, bool(body.get("introduce", False)))
        return {"turn_index": turn_index}

    @app.post("/sessions/{session_id}/close")
    async def close(session_id: str):
        runtime = _session(session_id)
        return await anyio.to_thread.run_sync(runtime.close)

    @app.get("/episodes/{episode_id}/memory")
    async def memory(episode_id: str):
        if episode_id not in episodes:
            raise UnknownSessionError(f"unknown episode: {episode_id}")
        return episodes[episode_id].graph.to_dict()

    @app.get("/episodes/{episode_id}")
    async def episode(episode_id: str):
        if episode_id not in episodes:
            raise UnknownSessionError(f"unknown episode: {episode_id}")
        runtime = episodes[episode_id]
        record = episode_to_dict(runtime.episode_record())
        record["status"] = {
            r.id: {"state": r.status, "pending": r.pending}
            for r in runtime.session_runtimes
        }
        return record

    if console_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=console_dir, html=True), name="console")

    return app
