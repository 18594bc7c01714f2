"""Scenario preparation: catalogs, pair alignment, and plan building.

A scenario fixes speakers (names and relationships), per-session partner
pairs, two modality items per session with no reuse across sessions, and
the two inter-session intervals from the closed five-phrase vocabulary.
The backend proposes; this module parses, validates, and redraws on any
violation, up to five attempts.
"""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path

from .. import prompts
from ..errors import ScenarioExhaustedError
from ..model import ModalityItem, Scenario, SessionPlan, SpeakerProfile, TimeInterval

MAX_ATTEMPTS = 5


def load_catalog(path) -> list[ModalityItem]:
    """Modality catalog from CSV or JSONL: id, kind, caption, location_tag,
    asset_uri."""
    path = Path(path)
    rows: list[dict] = []
    if path.suffix.lower() == ".csv":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    else:
        with open(path, encoding="utf-8") as fh:
            rows = [json.loads(line) for line in fh if line.strip()]
    items = []
    for row in rows:
        items.append(ModalityItem(
            id=row["id"],
            kind=row["kind"],
            caption=row["caption"],
            location_tag=(row.get("location_tag") or None),
            asset_uri=(row.get("asset_uri") or None),
        ))
    return items


def check_pair_alignment(a: ModalityItem, b: ModalityItem, judge) -> bool:
    """Whether two captions can coexist in one shared real-time context."""
    rendered = prompts.render("pair_alignment",
                              {"CAPTION A": a.caption, "CAPTION B": b.caption})
    return judge.judge_yes_no(rendered, "")


def modality_listing(items: list[ModalityItem]) -> str:
    return "\n".join(f"{n} - {item.caption}" for n, item in enumerate(items, start=1))


_FIELD_RES = {
    "main_name": re.compile(r"Main speaker name:\s*(.+)", re.IGNORECASE),
    "main_rel": re.compile(r"Main speaker relationship:\s*(.+)", re.IGNORECASE),
}
_PARTNER_RE = re.compile(r"Partner (\d) name:\s*(.+)", re.IGNORECASE)
_PARTNER_REL_RE = re.compile(r"Partner (\d) relationship:\s*(.+)", re.IGNORECASE)
_SCENES_RE = re.compile(r"Scene numbers for session (\d):\s*(\d+)\s*,\s*(\d+)", re.IGNORECASE)
_PAIR_RE = re.compile(r"partners' names in Scene (\d):\s*(.+?)\s*,\s*(.+)", re.IGNORECASE)
_INTERVAL_RE = re.compile(r"Time interval between session \d and \d:\s*(.+)", re.IGNORECASE)


def _speaker_id(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", name.strip().lower()).strip("-")


def parse_scenario_response(raw: str, items: list[ModalityItem],
                            scenario_id=None) -> Scenario:
    """Parse a plan in the scenario-prompt response format. Raises
    ValueError on any structural or vocabulary violation."""
    main_name = _required(_FIELD_RES["main_name"], raw, "main speaker name")
    main_rel = _required(_FIELD_RES["main_rel"], raw, "main speaker relationship")

    partner_names = {int(n): v.strip() for n, v in _PARTNER_RE.findall(raw)}
    partner_rels = {int(n): v.strip() for n, v in _PARTNER_REL_RE.findall(raw)}
    if set(partner_names) != {1, 2, 3}:
        raise ValueError("expected exactly partners 1..3")

    names = [main_name] + [partner_names[i] for i in (1, 2, 3)]
    if len({n.lower() for n in names}) != 4:
        raise ValueError("speaker names must be distinct")
    relationships = [main_rel] + [partner_rels.get(i, "friend") for i in (1, 2, 3)]
    speakers = tuple(
        SpeakerProfile(_speaker_id(name), name, rel)
        for name, rel in zip(names, relationships)
    )
    by_name = {p.name.lower(): p.id for p in speakers}

    scenes = {int(s): (int(a), int(b)) for s, a, b in _SCENES_RE.findall(raw)}
    pairs = {int(s): (a.strip(), b.strip()) for s, a, b in _PAIR_RE.findall(raw)}
    if set(scenes) != {1, 2, 3} or set(pairs) != {1, 2, 3}:
        raise ValueError("expected scenes and partner pairs for sessions 1..3")

    intervals = [TimeInterval.from_phrase(p) for p in _INTERVAL_RE.findall(raw)]
    if len(intervals) != 2:
        raise ValueError("expected exactly two time intervals")

    plans = []
    used_items: list[ModalityItem] = []
    for s in (1, 2, 3):
        numbers = scenes[s]
        slot_items = []
        for number in numbers:
            if not 1 <= number <= len(items):
                raise ValueError(f"scene number {number} out of range")
            slot_items.append(items[number - 1])
        pair_ids = []
        for name in pairs[s]:
            if name.lower() not in by_name:
                raise ValueError(f"unknown partner name {name!r}")
            pair_ids.append(by_name[name.lower()])
        plans.append(SessionPlan(tuple(pair_ids),
                                 tuple(i.id for i in slot_items)))
        used_items.extend(slot_items)

    return Scenario(
        speakers=speakers,
        main=speakers[0].id,
        session_plans=tuple(plans),
        intervals=tuple(intervals),
        items=tuple(dict.fromkeys(used_items)),  # dedupe raises in Scenario if reused
        id=scenario_id,
    )


def _required(pattern: re.Pattern, raw: str, what: str) -> str:
    match = pattern.search(raw)
    if not match:
        raise ValueError(f"response lacks {what}")
    return match.group(1).strip()


def build_scenario(cluster_items: list[ModalityItem], backend, seed: int,
                   scenario_id=None, judge=None,
                   max_attempts: int = MAX_ATTEMPTS) -> Scenario:
    """Ask the backend for a plan over the cluster's items; validate and
    redraw on violation (bad vocabulary, item reuse, partner illegality, or
    a misaligned session pair), up to max_attempts."""
    judge = judge if judge is not None else backend
    listing = modality_listing(cluster_items)
    last_error: Exception = ScenarioExhaustedError("no attempts made")
    for attempt in range(max_attempts):
        raw = backend.complete("scenario", {
            "MODALITY LIST": listing,
            "ATTEMPT": attempt,  # lets stateless backends vary redraws
        })
        try:
            scenario = parse_scenario_response(raw, cluster_items, scenario_id)
        except ValueError as err:
            last_error = err
            continue
        if not _sessions_aligned(scenario, judge):
            last_error = ValueError("a session's modality pair is misaligned")
            continue
        return scenario
    raise ScenarioExhaustedError(
        f"no valid scenario after {max_attempts} attempts: {last_error}")


def _sessions_aligned(scenario: Scenario, judge) -> bool:
    for plan in scenario.session_plans:
        a = scenario.item(plan.modality_slots[0])
        b = scenario.item(plan.modality_slots[1])
        if not check_pair_alignment(a, b, judge):
            return False
    return True
