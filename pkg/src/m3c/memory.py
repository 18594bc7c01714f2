"""Owner-scoped memory stores, undirected links, and the summary wire format.

Memories live in kind-partitioned stores per owner (text, image, audio), so a
query for one kind never yields another. Links are undirected, irreflexive,
and formed at storage time; retrieving a unit also surfaces its linked
closure.

Summary wire format: fragments joined by ``<sep>``, each ending with an
attribution suffix ``(about <name>)`` or
``(from <ordinal> session, about <name>)``. The literal ``no memory`` means
an empty summary. Prompt-side summaries that use ``/`` as the delimiter are
normalized to ``<sep>`` on ingestion so there is one parser and one
canonical form.
"""

from __future__ import annotations

import json
import re
from typing import Optional

from .errors import (
    MalformedFragmentError,
    NonTextUnitError,
    SelfLinkError,
    UnknownIdError,
    UnknownOrdinalError,
)
from .model import MemoryLink, MemoryUnit

SEP = "<sep>"
NO_MEMORY = "no memory"

_ORDINALS = ("first", "second", "third")

# "... (about Jamie)" or "... (from first session, about me)." — optional
# trailing period per the generation format.
_ATTRIBUTION_RE = re.compile(
    r"\((?:from\s+(?P<ordinal>[A-Za-z]+)\s+session\s*,\s*)?"
    r"about\s+(?P<name>[^()]+?)\s*\)\s*\.?\s*$",
    re.IGNORECASE,
)

_SELF_NAMES = {"me", "myself"}


def normalize_summary_delimiters(raw: str) -> str:
    """Rewrite prompt-format ``/`` delimiters to the canonical ``<sep>``.

    Applied only when the text carries no ``<sep>`` already, so canonical
    summaries pass through untouched and sentence-internal slashes
    (e.g. "24/7") are never split: only ``/`` surrounded by whitespace is a
    delimiter in the prompt format.
    """
    if SEP in raw:
        return raw
    return re.sub(r"\s+/\s+", f" {SEP} ", raw)


def parse_summary(raw: str, owner: str, session: int) -> list[MemoryUnit]:
    """Parse a summary into text memory units owned by ``owner``.

    Splits on the literal ``<sep>``; each fragment must end with an
    attribution suffix. ``me``/``myself`` map to about="self". A
    ``from <ordinal> session`` clause overrides the default ``session``
    (first=0, second=1, third=2). The literal ``no memory`` yields [].

    Raises MalformedFragmentError (with the fragment index) when a fragment
    lacks the suffix, and UnknownOrdinalError for ordinals beyond third.
    """
    if raw.strip().lower() == NO_MEMORY:
        return []

    units: list[MemoryUnit] = []
    for idx, fragment in enumerate(raw.split(SEP)):
        fragment = fragment.strip()
        match = _ATTRIBUTION_RE.search(fragment)
        if match is None:
            raise MalformedFragmentError(idx, fragment)
        text = fragment[: match.start()].strip()
        if not text:
            raise MalformedFragmentError(idx, fragment)

        name = match.group("name").strip()
        about = "self" if name.lower() in _SELF_NAMES else name

        origin = session
        ordinal = match.group("ordinal")
        if ordinal is not None:
            ordinal = ordinal.lower()
            if ordinal not in _ORDINALS:
                raise UnknownOrdinalError(f"unknown session ordinal: {ordinal!r}")
            origin = _ORDINALS.index(ordinal)

        units.append(
            MemoryUnit(
                id=f"{owner}.s{session}.m{idx:02d}",
                owner=owner,
                session_of_origin=origin,
                kind="text",
                text=text,
                about=about,
            )
        )
    return units


def format_summary(units: list[MemoryUnit], *, session: Optional[int] = None) -> str:
    """Render text units back to the wire format; inverse of parse_summary
    on (text, about, session_of_origin).

    A fragment is ``<text> (about <name>)`` when the unit originates from
    ``session`` (or when all units share one session and none is given);
    otherwise the explicit ``(from <ordinal> session, about <name>)`` form
    is used so the origin survives a round trip. [] renders as
    ``no memory``; "self" renders as "me".
    """
    if any(u.kind != "text" for u in units):
        raise NonTextUnitError("only text memories have a summary form")
    if not units:
        return NO_MEMORY

    if session is None:
        origins = {u.session_of_origin for u in units}
        if len(origins) == 1:
            session = origins.pop()

    fragments = []
    for unit in units:
        name = "me" if unit.about == "self" else unit.about
        if unit.session_of_origin == session:
            fragments.append(f"{unit.text} (about {name})")
        else:
            ordinal = _ORDINALS[unit.session_of_origin]
            fragments.append(f"{unit.text} (from {ordinal} session, about {name})")
    return f" {SEP} ".join(fragments)


class MemoryGraph:
    """Units indexed per (owner, kind) plus an undirected link relation.

    Single writer, many readers: mutations are serialized by the owning
    orchestrator; reads hand out copies or immutable values.
    """

    def __init__(self):
        self._units: dict[str, MemoryUnit] = {}
        self._order: dict[str, int] = {}
        self._by_store: dict[tuple[str, str], list[str]] = {}
        self._neighbors: dict[str, set[str]] = {}

    def __len__(self) -> int:
        return len(self._units)

    def __contains__(self, unit_id: str) -> bool:
        return unit_id in self._units

    def add_unit(self, unit: MemoryUnit) -> MemoryUnit:
        if unit.id in self._units:
            raise ValueError(f"duplicate unit id: {unit.id}")
        self._units[unit.id] = unit
        self._order[unit.id] = len(self._order)
        self._by_store.setdefault((unit.owner, unit.kind), []).append(unit.id)
        self._neighbors.setdefault(unit.id, set())
        return unit

    def get(self, unit_id: str) -> MemoryUnit:
        try:
            return self._units[unit_id]
        except KeyError:
            raise UnknownIdError(f"unknown memory unit: {unit_id}") from None

    def units(self) -> list[MemoryUnit]:
        """All units in insertion order."""
        return list(self._units.values())

    def units_for(self, owner: str, kind: str) -> list[MemoryUnit]:
        """The (owner, kind) store, in insertion order."""
        return [self._units[i] for i in self._by_store.get((owner, kind), [])]

    def units_for_owner(self, owner: str) -> list[MemoryUnit]:
        """All of one owner's units across kinds, in insertion order."""
        return [u for u in self._units.values() if u.owner == owner]

    def added_order(self, unit_id: str) -> int:
        """Insertion sequence number; defines recency for link candidates."""
        self.get(unit_id)
        return self._order[unit_id]

    # --- links ---

    def add_link(self, a: str, b: str) -> MemoryLink:
        """Create an undirected link; idempotent and symmetric."""
        if a == b:
            raise SelfLinkError(f"cannot link {a} to itself")
        self.get(a)
        self.get(b)
        self._neighbors[a].add(b)
        self._neighbors[b].add(a)
        return MemoryLink(a, b)

    def has_link(self, a: str, b: str) -> bool:
        return b in self._neighbors.get(a, ())

    def neighbors(self, unit_id: str) -> set[str]:
        self.get(unit_id)
        return set(self._neighbors[unit_id])

    def links(self) -> list[MemoryLink]:
        """All links, sorted, each reported once."""
        seen = set()
        for a, nbrs in self._neighbors.items():
            for b in nbrs:
                seen.add(MemoryLink(a, b))
        return sorted(seen, key=lambda l: (l.a, l.b))

    def link_count(self) -> int:
        return len(self.links())

    def linked_closure(self, unit_id: str, depth: int = 1) -> set[MemoryUnit]:
        """Units reachable within ``depth`` link hops, excluding the seed."""
        self.get(unit_id)
        frontier = {unit_id}
        reached: set[str] = set()
        for _ in range(max(depth, 0)):
            frontier = {
                n
                for uid in frontier
                for n in self._neighbors[uid]
                if n != unit_id and n not in reached
            }
            if not frontier:
                break
            reached.update(frontier)
        return {self._units[uid] for uid in reached}

    # --- persistence ---

    def to_dict(self) -> dict:
        return {
            "units": [
                {
                    "id": u.id,
                    "owner": u.owner,
                    "session_of_origin": u.session_of_origin,
                    "kind": u.kind,
                    "text": u.text,
                    "about": u.about,
                    "modality_ref": u.modality_ref,
                }
                for u in self._units.values()
            ],
            "links": [[l.a, l.b] for l in self.links()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MemoryGraph":
        graph = cls()
        for u in data.get("units", ()):
            graph.add_unit(
                MemoryUnit(
                    id=u["id"],
                    owner=u["owner"],
                    session_of_origin=u["session_of_origin"],
                    kind=u["kind"],
                    text=u["text"],
                    about=u.get("about"),
                    modality_ref=u.get("modality_ref"),
                )
            )
        for a, b in data.get("links", ()):
            graph.add_link(a, b)
        return graph

    def dumps(self) -> str:
        """Canonical JSON: units in insertion order, links sorted. Loading
        and re-serializing an unmodified graph is byte-identical."""
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)

    @classmethod
    def loads(cls, text: str) -> "MemoryGraph":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "MemoryGraph":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.loads(fh.read())
