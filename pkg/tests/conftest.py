import pytest

from m3c.model import (
    Episode,
    ModalityItem,
    Scenario,
    Session,
    SessionPlan,
    SpeakerProfile,
    TimeInterval,
    Turn,
)

SPEAKERS = (
    SpeakerProfile("alice", "Alice", "friend"),
    SpeakerProfile("bob", "Bob", "colleague"),
    SpeakerProfile("cara", "Cara", "neighbor"),
    SpeakerProfile("dana", "Dana", "cousin"),
)

PARTNER_PLAN = (("bob", "cara"), ("bob", "dana"), ("cara", "dana"))


def make_items():
    items = []
    for s in range(3):
        items.append(ModalityItem(f"img-{s}", "image", f"an image for session {s}",
                                  location_tag="park", asset_uri=f"assets/img-{s}.jpg"))
        items.append(ModalityItem(f"aud-{s}", "audio", f"a sound for session {s}",
                                  location_tag="park", asset_uri=f"assets/aud-{s}.wav"))
    return items


def make_session(index, partners, turns_count=8, slots=None, main="alice"):
    participants = (main,) + tuple(partners)
    slots = slots or (f"img-{index}", f"aud-{index}")
    turns = []
    for i in range(turns_count):
        turns.append(Turn(
            index=i,
            speaker=participants[i % 3],
            text=f"session {index} turn {i} chatter",
            introduces=slots[0] if i == 2 else (slots[1] if i == 5 else None),
        ))
    return Session(index=index, main_speaker=main, partners=tuple(partners),
                   modality_slots=tuple(slots), turns=tuple(turns))


def make_episode(episode_id="ep-fixture", turns_per_session=8, partner_plan=PARTNER_PLAN,
                 speakers=SPEAKERS, main="alice"):
    sessions = tuple(
        make_session(i, partner_plan[i], turns_count=turns_per_session, main=main)
        for i in range(len(partner_plan))
    )
    return Episode(
        id=episode_id,
        speakers=speakers,
        main_speaker=main,
        sessions=sessions,
        intervals=(TimeInterval.HOURS, TimeInterval.WEEKS)[: max(len(sessions) - 1, 0)],
    )


SCENARIO_CAPTIONS = (
    ("image", "a snowboarder carving through fresh powder on a steep slope"),
    ("audio", "skis scraping over packed snow while a lift hums"),
    ("image", "a small harbor with fishing boats tied to wooden posts"),
    ("audio", "gulls crying over slow waves against a pier"),
    ("image", "a street market stall stacked with ripe oranges and lemons"),
    ("audio", "a crowd murmuring while a vendor calls out prices"),
)


def make_scenario(scenario_id="sc-test"):
    items = tuple(
        ModalityItem(f"it-{i}", kind, caption, location_tag="outdoors",
                     asset_uri=f"assets/{i}.bin")
        for i, (kind, caption) in enumerate(SCENARIO_CAPTIONS)
    )
    plans = (
        SessionPlan(("bob", "cara"), ("it-0", "it-1")),
        SessionPlan(("bob", "dana"), ("it-2", "it-3")),
        SessionPlan(("cara", "dana"), ("it-4", "it-5")),
    )
    return Scenario(
        speakers=SPEAKERS,
        main="alice",
        session_plans=plans,
        intervals=(TimeInterval.HOURS, TimeInterval.WEEKS),
        items=items,
        id=scenario_id,
    )


def full_episode_script(horizon=16):
    """A complete deterministic script for a 4-speaker, 3-session episode:
    every turn's winner, line, modality volunteering, summaries, and links."""
    participants = {0: ("alice", "bob", "cara"),
                    1: ("alice", "bob", "dana"),
                    2: ("alice", "cara", "dana")}
    bids = {}
    utterances = {}
    retrieval = {}
    modality = {}
    for s in range(3):
        group = participants[s]
        for t in range(horizon):
            winner = group[(s + t) % 3]
            for speaker in group:  # every seat bids every turn
                bids[f"{s}/{t}/{speaker}"] = None
            bids[f"{s}/{t}/{winner}"] = 0.6 + 0.01 * ((t * 7) % 5)
            rival = group[(s + t + 1) % 3]
            bids[f"{s}/{t}/{rival}"] = 0.31
            utterances[f"{s}/{t}/{winner}"] = (
                f"(s{s} t{t}) {winner} keeps the conversation moving.")
        # main volunteers both slots early in every session
        modality[f"{s}/2"] = True
        modality[f"{s}/6"] = True
    # alice retrieves in later sessions; she wins those turns in the rotation
    for s, t, token in ((1, 3, "RET_IMG"), (2, 3, "RET_AUDIO"), (2, 10, "RET_IMG")):
        winner = participants[s][(s + t) % 3]
        retrieval[f"{s}/{t}/{winner}"] = token
        utterances[f"{s}/{t}/{winner}"] = (
            f"(s{s} t{t}) {winner} brings up an old memory.")
    summaries = {
        "Alice": [
            "I loved watching the snowboarder carve the slope (about me) <sep> "
            "Bob wants to plan a harbor trip soon (about Bob)",
            "The harbor boats reminded me of the snow trip (about me) <sep> "
            "Dana promised to bring a camera next time (about Dana)",
            "I want to buy oranges from that market stall again (about me)",
        ]
    }
    links = [
        ["I loved watching the snowboarder carve the slope",
         "a snowboarder carving through fresh powder on a steep slope"],
        ["The harbor boats reminded me of the snow trip",
         "a small harbor with fishing boats tied to wooden posts"],
    ]
    return {
        "bids": bids,
        "utterances": utterances,
        "retrieval": retrieval,
        "modality": modality,
        "summaries": summaries,
        "links": links,
    }


@pytest.fixture
def episode():
    return make_episode()


@pytest.fixture
def scenario():
    return make_scenario()
