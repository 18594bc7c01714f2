import json
import time

import pytest
from fastapi.testclient import TestClient

from m3c.service import create_app
from m3c.model import scenario_to_dict

from conftest import full_episode_script, make_scenario


@pytest.fixture
def client():
    with TestClient(create_app()) as c:
        yield c


def parse_sse(text):
    """[(seq, {kind, payload, seq})] from a raw SSE body."""
    events = []
    for block in text.strip().split("\n\n"):
        seq = None
        data = None
        for line in block.splitlines():
            if line.startswith("id:"):
                seq = int(line[3:].strip())
            elif line.startswith("data:"):
                data = json.loads(line[5:].strip())
        if seq is not None and data is not None:
            events.append((seq, data))
    return events


def create_scripted_episode(client, human=None, horizon=16, script=None,
                            episode_id="ep-svc"):
    body = {
        "scenario": scenario_to_dict(make_scenario()),
        "seed": 7,
        "horizon": horizon,
        "episode_id": episode_id,
        "backend": {"type": "scripted",
                    "script": script if script is not None else full_episode_script(horizon)},
    }
    if human:
        body["human_speaker"] = human
    response = client.post("/episodes", json=body)
    assert response.status_code == 200
    return response.json()["episode_id"]


def open_session(client, episode_id, body=None):
    response = client.post(f"/episodes/{episode_id}/sessions", json=body or {})
    assert response.status_code == 200, response.text
    return response.json()["session_id"]


def wait_closed(client, session_id, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        response = client.get(f"/sessions/{session_id}/events", params={"from": 0})
        events = parse_sse(response.text)
        if any(e["kind"] in ("session_closed", "error") for _, e in events):
            return events
        time.sleep(0.05)
    raise AssertionError("session never closed")


class TestHealthAndErrors:
    def test_healthz(self, client):
        assert client.get("/healthz").json() == {"status": "ok"}

    def test_unknown_session_404(self, client):
        response = client.get("/sessions/nope/events")
        assert response.status_code == 404
        assert response.json()["error"] == "UNKNOWN_SESSION"

    def test_unknown_episode_404(self, client):
        assert client.post("/episodes/nope/sessions", json={}).status_code == 404


class TestAgentOnlySession:
    def test_stream_replay_reconstructs_transcript(self, client):
        episode_id = create_scripted_episode(client)
        session_id = open_session(client, episode_id)
        events = wait_closed(client, session_id)

        # seq strictly increasing from 1
        seqs = [seq for seq, _ in events]
        assert seqs == list(range(1, len(seqs) + 1))

        turn_events = [e for _, e in events if e["kind"] == "turn"]
        modality_events = [e for _, e in events if e["kind"] == "modality"]
        closed_events = [e for _, e in events if e["kind"] == "session_closed"]
        assert len(turn_events) == 16
        assert len(modality_events) == 2
        assert len(closed_events) == 1

        # each modality event precedes any turn event referencing its item
        order = [(e["kind"], e["payload"]) for _, e in events]
        for modality_index, (kind, payload) in enumerate(order):
            if kind == "turn" and payload["introduces"]:
                earlier = [p["item"]["id"] for k, p in order[:modality_index]
                           if k == "modality"]
                assert payload["introduces"] in earlier

        # replay equals the persisted episode
        persisted = client.get(f"/episodes/{episode_id}").json()
        persisted_turns = persisted["sessions"][0]["turns"]
        rebuilt = [{"index": e["payload"]["index"],
                    "speaker": e["payload"]["speaker"],
                    "text": e["payload"]["text"],
                    "introduces": e["payload"]["introduces"],
                    "memory_refs": e["payload"]["memory_refs"]}
                   for e in turn_events]
        assert rebuilt == persisted_turns

    def test_reconnect_resumes_after_seq(self, client):
        episode_id = create_scripted_episode(client, episode_id="ep-svc2")
        session_id = open_session(client, episode_id)
        wait_closed(client, session_id)

        response = client.get(f"/sessions/{session_id}/events", params={"from": 10})
        events = parse_sse(response.text)
        assert events[0][0] == 11
        full = parse_sse(
            client.get(f"/sessions/{session_id}/events", params={"from": 0}).text)
        assert [e for _, e in full][10:] == [e for _, e in events]

    def test_post_to_agent_only_session_is_not_your_turn(self, client):
        episode_id = create_scripted_episode(client, episode_id="ep-svc3")
        session_id = open_session(client, episode_id)
        wait_closed(client, session_id)
        # closed beats seatless: agent-only session that finished reports 410
        response = client.post(f"/sessions/{session_id}/utterances",
                               json={"text": "hi"})
        assert response.status_code == 410

    def test_memory_graph_populated_after_close(self, client):
        episode_id = create_scripted_episode(client, episode_id="ep-svc4")
        session_id = open_session(client, episode_id)
        wait_closed(client, session_id)
        graph = client.get(f"/episodes/{episode_id}/memory").json()
        assert len(graph["units"]) >= 2  # two modality units at minimum
        kinds = {u["kind"] for u in graph["units"]}
        assert {"image", "audio"} <= kinds


def human_session_script(horizon=16, human_turn=5):
    """bob carries every turn except `human_turn`, where nobody bids and the
    floor falls back to the main speaker (the human)."""
    bids = {}
    utterances = {}
    for t in range(horizon):
        if t == human_turn:
            continue
        bids[f"0/{t}/bob"] = 0.8
        utterances[f"0/{t}/bob"] = f"(t{t}) bob talks."
    return {"bids": bids, "utterances": utterances,
            "modality": {"0/2": True, "0/6": True},
            "summaries": {"Alice": "no memory"}}


class TestHumanSeat:
    def post_with_retry(self, client, session_id, text, attempts=100):
        for _ in range(attempts):
            response = client.post(f"/sessions/{session_id}/utterances",
                                   json={"text": text})
            if response.status_code == 200:
                return response.json()
            assert response.status_code == 409
            time.sleep(0.02)
        raise AssertionError("post never accepted")

    def test_human_turn_lands_exactly_once(self, client):
        episode_id = create_scripted_episode(
            client, human="alice", episode_id="ep-human",
            script=human_session_script())
        session_id = open_session(client, episode_id)
        ack = self.post_with_retry(client, session_id, "hello from the human seat")
        assert ack["turn_index"] == 5

        # session runs to horizon, then needs an explicit close
        deadline = time.monotonic() + 10
        while time.monotonic() < deadline:
            status = client.get(f"/episodes/{episode_id}").json()["status"]
            if status[session_id]["state"] == "awaiting_close":
                break
            time.sleep(0.05)
        response = client.post(f"/sessions/{session_id}/close")
        assert response.status_code == 200, response.text

        events = wait_closed(client, session_id)
        human_turns = [e["payload"] for _, e in events
                       if e["kind"] == "turn"
                       and e["payload"]["speaker"] == "alice"]
        assert len(human_turns) == 1
        assert human_turns[0]["text"] == "hello from the human seat"
        assert human_turns[0]["index"] == 5

    def test_post_after_close_is_session_closed(self, client):
        episode_id = create_scripted_episode(client, episode_id="ep-closed")
        session_id = open_session(client, episode_id)
        wait_closed(client, session_id)
        response = client.post(f"/sessions/{session_id}/utterances",
                               json={"text": "too late"})
        assert response.status_code == 410
        assert response.json()["error"] == "SESSION_CLOSED"


class TestSessionSequencing:
    def test_next_session_requires_previous_closed(self, client):
        episode_id = create_scripted_episode(
            client, human="alice", episode_id="ep-seq",
            script=human_session_script())
        open_session(client, episode_id)
        response = client.post(f"/episodes/{episode_id}/sessions", json={})
        assert response.status_code == 409

    def test_three_sessions_with_interval_override(self, client):
        episode_id = create_scripted_episode(client, episode_id="ep-three")
        for index in range(3):
            body = {"interval": "months"} if index else {}
            session_id = open_session(client, episode_id, body)
            wait_closed(client, session_id)
        record = client.get(f"/episodes/{episode_id}").json()
        assert len(record["sessions"]) == 3
        assert record["intervals"][0] == "months"
        response = client.post(f"/episodes/{episode_id}/sessions", json={})
        assert response.status_code == 410
