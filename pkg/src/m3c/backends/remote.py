"""Remote HTTP backend.

Wire format: POST a UTF-8 JSON body
``{model, messages: [{role, content}], temperature, max_tokens}`` and read
back ``{content, token_probability?}``. Endpoint, model, decode parameters,
and timeout come from a TOML or JSON config file; the API key comes from
the M3C_BACKEND_KEY environment variable and travels as a bearer token.

The adapter maps raw model text onto the token grammar (turn bids,
retrieval tokens, link verdicts, yes/no); anything unparseable surfaces as
BACKEND_PROTOCOL with the raw text attached.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import requests

from .. import prompts
from ..errors import BackendProtocolError, TimeoutError_, TransportError
from .base import (
    AgentBackend,
    RetrievalDecision,
    TurnBid,
    TurnContext,
    parse_link_verdict,
    parse_retrieval_decision,
    parse_turn_bid,
    parse_yes_no,
)

KEY_ENV_VAR = "M3C_BACKEND_KEY"


@dataclass(frozen=True)
class RemoteConfig:
    url: str
    model: str
    temperature: float = 0.7
    max_tokens: int = 512
    timeout_s: float = 30.0

    @classmethod
    def from_file(cls, path) -> "RemoteConfig":
        path = Path(path)
        raw = path.read_bytes()
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            data = tomllib.loads(raw.decode("utf-8"))
        else:
            data = json.loads(raw)
        backend = data.get("backend", data)
        return cls(
            url=backend["url"],
            model=backend["model"],
            temperature=float(backend.get("temperature", 0.7)),
            max_tokens=int(backend.get("max_tokens", 512)),
            timeout_s=float(backend.get("timeout_s", 30.0)),
        )


def remote_call(
    config: RemoteConfig,
    messages: list[dict],
    temperature: Optional[float] = None,
    max_tokens: Optional[int] = None,
) -> tuple[str, Optional[float]]:
    """One round trip to the endpoint. Returns (content, token_probability)."""
    body = {
        "model": config.model,
        "messages": messages,
        "temperature": config.temperature if temperature is None else temperature,
        "max_tokens": config.max_tokens if max_tokens is None else max_tokens,
    }
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(KEY_ENV_VAR)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    try:
        response = requests.post(config.url, json=body, headers=headers,
                                 timeout=config.timeout_s)
    except requests.Timeout as exc:
        raise TimeoutError_(f"backend timed out after {config.timeout_s}s") from exc
    except requests.RequestException as exc:
        raise TransportError(str(exc)) from exc
    if response.status_code != 200:
        raise TransportError(f"backend returned HTTP {response.status_code}",
                             status=response.status_code, body=response.text[:500])
    try:
        data = response.json()
        content = data["content"]
    except (ValueError, KeyError) as exc:
        raise BackendProtocolError("response is not {content, ...} JSON",
                                   raw=response.text[:500]) from exc
    probability = data.get("token_probability")
    return content, None if probability is None else float(probability)


def _transcript(context: TurnContext) -> str:
    lines = []
    if context.interval:
        lines.append(f"({context.interval})")
    for speaker_id, text in context.turns:
        lines.append(f"[{context.name_of(speaker_id)}] {text}")
    for kind, caption in context.perceived:
        sense = "seen" if kind == "image" else "heard"
        lines.append(f"(now {sense}: {caption})")
    return "\n".join(lines)


class RemoteBackend(AgentBackend):
    """Carries the engine's prompts to a hosted model and parses the token
    grammar coming back. Turn-bid probability prefers the reported token
    likelihood and falls back to a self-reported confidence in the text."""

    def __init__(self, config: RemoteConfig):
        self.config = config

    def _call(self, messages: list[dict], max_tokens: Optional[int] = None,
              temperature: Optional[float] = None) -> tuple[str, Optional[float]]:
        return remote_call(self.config, messages, temperature=temperature,
                           max_tokens=max_tokens)

    def decide_turn(self, context: TurnContext) -> TurnBid:
        system = prompts.render("turn_bid", {"SPEAKER NAME": context.name_of(context.speaker)})
        content, probability = self._call(
            [{"role": "system", "content": system},
             {"role": "user", "content": _transcript(context)}],
            max_tokens=8, temperature=0.0)
        return parse_turn_bid(content, probability)

    def decide_retrieval(self, context: TurnContext) -> RetrievalDecision:
        system = prompts.render("retrieval_decision",
                                {"SPEAKER NAME": context.name_of(context.speaker)})
        content, _ = self._call(
            [{"role": "system", "content": system},
             {"role": "user", "content": _transcript(context)}],
            max_tokens=8, temperature=0.0)
        return parse_retrieval_decision(content)

    def generate_utterance(self, context: TurnContext, retrieved=None) -> str:
        subs = {
            "MAIN SPEAKER NAME": context.name_of(context.main_speaker),
            "MAIN SPEAKER RELATIONSHIP": dict(context.relationships).get(
                context.main_speaker, "main speaker"),
            "SUB SPEAKERS": " ".join(
                f"{context.name_of(p)}-{dict(context.relationships).get(p, 'partner')}"
                for p in context.participants if p != context.main_speaker),
            "MEMORY SECTION": _memory_section(retrieved, context),
        }
        system = prompts.render("conversation_system", subs)
        user = _transcript(context) + f"\n[{context.name_of(context.speaker)}]"
        content, _ = self._call([{"role": "system", "content": system},
                                 {"role": "user", "content": user}])
        return content.strip()

    def summarize(self, transcript: str, perspective: str) -> str:
        system = prompts.render("summarize_system",
                                {"ABOUT WHO": perspective, "FULL SESSIONS": transcript})
        content, _ = self._call([{"role": "system", "content": system}])
        return content.strip()

    def judge_link(self, memory_a: str, memory_b: str) -> bool:
        rendered = prompts.render("link_system",
                                  {"MEMORY 1": memory_a, "MEMORY 2": memory_b})
        content, _ = self._call([{"role": "user", "content": rendered}],
                                max_tokens=8, temperature=0.0)
        return parse_link_verdict(content)

    def judge_yes_no(self, question: str, material: str) -> bool:
        content, _ = self._call(
            [{"role": "system", "content": question},
             {"role": "user", "content": material}],
            max_tokens=8, temperature=0.0)
        return parse_yes_no(content)

    def complete(self, prompt_id: str, substitutions: dict) -> str:
        rendered = prompts.render(prompt_id, substitutions)
        content, _ = self._call([{"role": "user", "content": rendered}])
        return content


class RemoteEmbedder:
    """Embedding endpoint client: POST {model, input} -> {embedding: [...]}.

    Configured under an [embedder] table ({url, model, dim, timeout_s}) in
    the same TOML/JSON config file as the completion backend.
    """

    def __init__(self, url: str, model: str, dim: int, timeout_s: float = 30.0):
        self.url = url
        self.model = model
        self.dim = dim
        self.timeout_s = timeout_s

    @classmethod
    def from_file(cls, path) -> "RemoteEmbedder":
        path = Path(path)
        raw = path.read_bytes()
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            data = tomllib.loads(raw.decode("utf-8"))
        else:
            data = json.loads(raw)
        table = data["embedder"]
        return cls(url=table["url"], model=table["model"], dim=int(table["dim"]),
                   timeout_s=float(table.get("timeout_s", 30.0)))

    def embed_text(self, text: str):
        from ..model import EmbeddingVector

        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(KEY_ENV_VAR)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        try:
            response = requests.post(self.url, json={"model": self.model, "input": text},
                                     headers=headers, timeout=self.timeout_s)
        except requests.Timeout as exc:
            raise TimeoutError_(f"embedder timed out after {self.timeout_s}s") from exc
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if response.status_code != 200:
            raise TransportError(f"embedder returned HTTP {response.status_code}")
        try:
            values = response.json()["embedding"]
        except (ValueError, KeyError) as exc:
            raise BackendProtocolError("response is not {embedding: [...]} JSON",
                                       raw=response.text[:500]) from exc
        if len(values) != self.dim:
            from ..errors import DimMismatchError

            raise DimMismatchError(f"endpoint returned dim {len(values)}, expected {self.dim}")
        return EmbeddingVector(self.dim, tuple(float(v) for v in values))

    def embed_item(self, item):
        if item.features is not None:
            if item.features.dim != self.dim:
                from ..errors import DimMismatchError

                raise DimMismatchError(
                    f"item features dim {item.features.dim} != embedder dim {self.dim}")
            return item.features
        return self.embed_text(item.caption)


def _memory_section(retrieved, context: TurnContext) -> str:
    parts = []
    for text in context.recalled:
        parts.append(f"[MEMORY] {text} [LINK]")
    if retrieved is not None:
        links = " ".join(f"[LINK] {u.text}" for u in sorted(
            retrieved.expansion, key=lambda u: u.id))
        parts.append(f"[MEMORY] {retrieved.unit.text} {links}".rstrip())
    return " ".join(parts)
