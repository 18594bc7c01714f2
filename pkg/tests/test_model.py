import json

import pytest

from m3c.model import (
    EmbeddingVector,
    MemoryUnit,
    TimeInterval,
    episode_from_dict,
    episode_to_dict,
    episode_to_json_line,
    read_episodes_jsonl,
    validate_episode,
    write_episodes_jsonl,
)

from conftest import SPEAKERS, make_episode, make_session


class TestValidateEpisode:
    def test_well_formed_fixture_is_clean(self, episode):
        assert validate_episode(episode) == []

    def test_seven_turn_session_flagged(self):
        ep = make_episode()
        short = make_session(2, ("cara", "dana"), turns_count=7)
        ep = type(ep)(id=ep.id, speakers=ep.speakers, main_speaker=ep.main_speaker,
                      sessions=(ep.sessions[0], ep.sessions[1], short),
                      intervals=ep.intervals)
        assert validate_episode(ep) == ["MIN_TURNS@session2"]

    def test_duplicate_partner_pair_flagged(self):
        ep = make_episode(partner_plan=(("bob", "cara"), ("bob", "bob"), ("cara", "dana")))
        assert validate_episode(ep) == ["PARTNER_DUP@session1"]

    def test_partner_equal_to_main_flagged(self):
        ep = make_episode(partner_plan=(("alice", "cara"), ("bob", "dana"), ("cara", "dana")))
        assert validate_episode(ep) == ["PARTNER_DUP@session0"]

    def test_duplicate_name_flagged(self):
        speakers = (SPEAKERS[0], SPEAKERS[1], SPEAKERS[2],
                    type(SPEAKERS[3])("dana", "Alice", "cousin"))
        ep = make_episode(speakers=speakers)
        assert validate_episode(ep) == ["NAME_DUP"]

    def test_unused_partner_flagged(self):
        ep = make_episode(partner_plan=(("bob", "cara"), ("bob", "cara"), ("cara", "bob")))
        assert validate_episode(ep) == ["PARTNER_UNUSED"]

    def test_bad_session_count_flagged(self):
        ep = make_episode(partner_plan=(("bob", "cara"), ("bob", "dana")))
        assert "BAD_SESSION_COUNT" in validate_episode(ep)

    def test_orphan_speaker_turn_flagged(self):
        ep = make_episode()
        bad_turn = ep.sessions[1].turns[3]
        bad_turn = type(bad_turn)(index=3, speaker="cara", text=bad_turn.text)
        s1 = ep.sessions[1]
        s1 = type(s1)(index=1, main_speaker=s1.main_speaker, partners=s1.partners,
                      modality_slots=s1.modality_slots,
                      turns=s1.turns[:3] + (bad_turn,) + s1.turns[4:])
        ep = type(ep)(id=ep.id, speakers=ep.speakers, main_speaker=ep.main_speaker,
                      sessions=(ep.sessions[0], s1, ep.sessions[2]), intervals=ep.intervals)
        assert validate_episode(ep) == ["ORPHAN_SPEAKER_TURN@session1"]

    def test_report_order_is_deterministic(self):
        # duplicate name + two short sessions + dup partners: codes come out
        # in declaration order, session-scoped ones by session index
        speakers = (SPEAKERS[0], SPEAKERS[1], SPEAKERS[2],
                    type(SPEAKERS[3])("dana", "Bob", "cousin"))
        ep = make_episode(
            speakers=speakers, turns_per_session=7,
            partner_plan=(("bob", "cara"), ("dana", "dana"), ("cara", "dana")))
        report = validate_episode(ep)
        assert report == [
            "NAME_DUP",
            "PARTNER_DUP@session1",
            "MIN_TURNS@session0",
            "MIN_TURNS@session1",
            "MIN_TURNS@session2",
        ]
        assert validate_episode(ep) == report  # pure


class TestSerialization:
    def test_jsonl_field_names(self, episode):
        data = json.loads(episode_to_json_line(episode))
        assert list(data.keys()) == ["id", "speakers", "main_speaker", "intervals", "sessions"]
        assert list(data["speakers"][0].keys()) == ["id", "name", "relationship"]
        assert list(data["sessions"][0].keys()) == [
            "index", "main_speaker", "partners", "modality_slots", "turns"]
        assert list(data["sessions"][0]["turns"][0].keys()) == [
            "index", "speaker", "text", "introduces", "memory_refs"]
        assert data["intervals"] == ["hours", "weeks"]

    def test_round_trip(self, episode):
        again = episode_from_dict(episode_to_dict(episode))
        assert again == episode

    def test_jsonl_file_round_trip(self, tmp_path, episode):
        path = tmp_path / "episodes.jsonl"
        other = make_episode(episode_id="ep-2")
        write_episodes_jsonl([episode, other], path)
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")
        assert read_episodes_jsonl(path) == [episode, other]


class TestTimeInterval:
    def test_phrases(self):
        assert TimeInterval.HOURS.phrase == "a few hours later"
        assert TimeInterval.YEARS.phrase == "a couple of years later"

    def test_phrase_round_trip(self):
        for interval in TimeInterval:
            assert TimeInterval.from_phrase(interval.phrase) is interval

    def test_unknown_phrase_rejected(self):
        with pytest.raises(ValueError):
            TimeInterval.from_phrase("a decade later")


class TestTypeInvariants:
    def test_text_memory_requires_about(self):
        with pytest.raises(ValueError):
            MemoryUnit(id="m", owner="alice", session_of_origin=0, kind="text",
                       text="something", about=None)

    def test_modality_memory_requires_ref(self):
        with pytest.raises(ValueError):
            MemoryUnit(id="m", owner="alice", session_of_origin=0, kind="image",
                       text="caption", modality_ref=None)

    def test_embedding_rejects_non_finite(self):
        with pytest.raises(ValueError):
            EmbeddingVector(2, (1.0, float("nan")))

    def test_embedding_rejects_dim_mismatch(self):
        with pytest.raises(ValueError):
            EmbeddingVector(3, (1.0, 2.0))
