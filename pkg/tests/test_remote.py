import json

import pytest
import requests

from m3c.backends import RemoteBackend, RemoteConfig, TurnContext, remote_call
from m3c.backends.remote import RemoteEmbedder
from m3c.errors import BackendProtocolError, TimeoutError_, TransportError


class FakeResponse:
    def __init__(self, status_code=200, payload=None, text=""):
        self.status_code = status_code
        self._payload = payload
        self.text = text or json.dumps(payload)

    def json(self):
        if self._payload is None:
            raise ValueError("not json")
        return self._payload


@pytest.fixture
def config():
    return RemoteConfig(url="http://backend.test/v1/complete", model="test-model")


def patch_post(monkeypatch, handler):
    calls = []

    def fake_post(url, json=None, headers=None, timeout=None):
        calls.append({"url": url, "json": json, "headers": headers,
                      "timeout": timeout})
        return handler(json)

    monkeypatch.setattr(requests, "post", fake_post)
    return calls


def ctx(speaker="alice"):
    return TurnContext(
        episode_id="ep", session_index=0, turn_index=0, speaker=speaker,
        main_speaker="alice", participants=("alice", "bob", "cara"),
        speaker_names=(("alice", "Alice"), ("bob", "Bob"), ("cara", "Cara")),
        relationships=(("alice", "friend"), ("bob", "pal"), ("cara", "pal")),
        turns=(("bob", "hi"),))


class TestRemoteCall:
    def test_request_shape_and_bearer_key(self, monkeypatch, config):
        monkeypatch.setenv("M3C_BACKEND_KEY", "sekrit")
        calls = patch_post(monkeypatch, lambda body: FakeResponse(
            payload={"content": "[YES]", "token_probability": 0.82}))
        content, probability = remote_call(
            config, [{"role": "user", "content": "hello"}])
        assert content == "[YES]"
        assert probability == 0.82
        sent = calls[0]
        assert sent["json"] == {
            "model": "test-model",
            "messages": [{"role": "user", "content": "hello"}],
            "temperature": 0.7,
            "max_tokens": 512,
        }
        assert sent["headers"]["Authorization"] == "Bearer sekrit"
        assert sent["timeout"] == 30.0

    def test_timeout_maps_to_timeout_error(self, monkeypatch, config):
        def boom(url, **kwargs):
            raise requests.Timeout("slow")
        monkeypatch.setattr(requests, "post", boom)
        with pytest.raises(TimeoutError_):
            remote_call(config, [])

    def test_connection_failure_maps_to_transport(self, monkeypatch, config):
        def boom(url, **kwargs):
            raise requests.ConnectionError("refused")
        monkeypatch.setattr(requests, "post", boom)
        with pytest.raises(TransportError):
            remote_call(config, [])

    def test_http_error_maps_to_transport(self, monkeypatch, config):
        patch_post(monkeypatch, lambda body: FakeResponse(status_code=500,
                                                          payload={"oops": 1}))
        with pytest.raises(TransportError):
            remote_call(config, [])

    def test_malformed_body_is_protocol_error(self, monkeypatch, config):
        patch_post(monkeypatch, lambda body: FakeResponse(payload={"wrong": "shape"}))
        with pytest.raises(BackendProtocolError):
            remote_call(config, [])


class TestRemoteBackendAdapters:
    def test_decide_turn_uses_token_probability(self, monkeypatch, config):
        patch_post(monkeypatch, lambda body: FakeResponse(
            payload={"content": "[YES]", "token_probability": 0.82}))
        bid = RemoteBackend(config).decide_turn(ctx())
        assert bid.wants_turn and bid.probability == 0.82

    def test_decide_turn_falls_back_to_self_report(self, monkeypatch, config):
        patch_post(monkeypatch, lambda body: FakeResponse(
            payload={"content": "[YES] 0.6"}))
        assert RemoteBackend(config).decide_turn(ctx()).probability == 0.6

    def test_decide_retrieval_no_ret(self, monkeypatch, config):
        patch_post(monkeypatch, lambda body: FakeResponse(
            payload={"content": "[NO_RET]"}))
        assert RemoteBackend(config).decide_retrieval(ctx()).token == "NO_RET"

    def test_off_grammar_turn_bid_raises(self, monkeypatch, config):
        patch_post(monkeypatch, lambda body: FakeResponse(
            payload={"content": "maybe"}))
        with pytest.raises(BackendProtocolError):
            RemoteBackend(config).decide_turn(ctx())

    def test_judge_link_parses_verdicts(self, monkeypatch, config):
        patch_post(monkeypatch, lambda body: FakeResponse(
            payload={"content": "[POSITIVE]"}))
        assert RemoteBackend(config).judge_link("a", "b") is True


class TestRemoteConfigLoading:
    def test_toml_file(self, tmp_path):
        path = tmp_path / "backend.toml"
        path.write_text(
            '[backend]\nurl = "http://h/v1"\nmodel = "m"\n'
            "temperature = 0.2\nmax_tokens = 64\ntimeout_s = 5.0\n")
        config = RemoteConfig.from_file(path)
        assert config.url == "http://h/v1"
        assert config.temperature == 0.2
        assert config.timeout_s == 5.0

    def test_json_file(self, tmp_path):
        path = tmp_path / "backend.json"
        path.write_text(json.dumps({"backend": {"url": "http://h/v1", "model": "m"}}))
        assert RemoteConfig.from_file(path).model == "m"


class TestRemoteEmbedder:
    def test_embeds_and_checks_dim(self, monkeypatch):
        patch_post(monkeypatch, lambda body: FakeResponse(
            payload={"embedding": [1.0, 0.0, 0.0]}))
        embedder = RemoteEmbedder(url="http://h/embed", model="e", dim=3)
        vector = embedder.embed_text("hello")
        assert vector.dim == 3
        assert vector.values == (1.0, 0.0, 0.0)

    def test_wrong_dim_rejected(self, monkeypatch):
        from m3c.errors import DimMismatchError
        patch_post(monkeypatch, lambda body: FakeResponse(
            payload={"embedding": [1.0, 0.0]}))
        with pytest.raises(DimMismatchError):
            RemoteEmbedder(url="http://h/embed", model="e", dim=3).embed_text("x")
