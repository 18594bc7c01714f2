"""Prompt templates, kept as data files.

Templates carry ``{NAME}`` placeholders. Rendering replaces only the keys
that are actually supplied, leaving everything else (including literal
brace examples inside instruction text) untouched.
"""

from __future__ import annotations

from importlib import resources

PROMPT_IDS = (
    "caption_refine",
    "location_image",
    "location_audio",
    "scenario",
    "pair_alignment",
    "session_generation",
    "modality_tagging",
    "memory_summary",
    "memory_linking",
    "memory_tagging",
    "episode_validation",
    "conversation_system",
    "summarize_system",
    "link_system",
    "turn_bid",
    "retrieval_decision",
)

_cache: dict[str, str] = {}


def load(prompt_id: str) -> str:
    if prompt_id not in PROMPT_IDS:
        raise KeyError(f"unknown prompt id: {prompt_id}")
    if prompt_id not in _cache:
        _cache[prompt_id] = (
            resources.files(__name__).joinpath(f"{prompt_id}.txt").read_text("utf-8")
        )
    return _cache[prompt_id]


def render(prompt_id: str, substitutions: dict) -> str:
    text = load(prompt_id)
    for key, value in substitutions.items():
        text = text.replace("{" + key + "}", str(value))
    return text
