import pytest

from m3c.backends import HashingEmbedder, RandomBidBackend, ScriptedBackend
from m3c.errors import EmptyCasesError, InsufficientTurnsError, MissingGoldError
from m3c.evaluation import (
    KindMetrics,
    eval_next_speaker,
    eval_retrieval,
    gold_ranks,
    load_dataset,
    mean_reciprocal_rank,
    recall_at_k,
)
from m3c.memory import MemoryGraph
from m3c.model import (
    Episode,
    MemoryUnit,
    Session,
    SpeakerProfile,
    TimeInterval,
    Turn,
)
from m3c.rng import SplitMix64

from conftest import SPEAKERS, make_episode


class TestRecallAtK:
    def test_hand_enumerated_example(self):
        assert recall_at_k([1, 3, 7], 5) == pytest.approx(2 / 3)

    def test_all_first(self):
        for k in (1, 3, 10):
            assert recall_at_k([1, 1, 1], k) == 1.0

    def test_miss_at_k1(self):
        assert recall_at_k([2], 1) == 0.0

    def test_empty_cases_rejected(self):
        with pytest.raises(EmptyCasesError):
            recall_at_k([], 5)

    def test_zero_rank_rejected(self):
        with pytest.raises(ValueError):
            recall_at_k([0, 1], 1)

    def test_monotone_in_k_seeded(self):
        rng = SplitMix64(31)
        for _ in range(100):
            size = rng.next_int(1, 40)
            ranks = [rng.next_int(1, size) for _ in range(rng.next_int(1, 30))]
            values = [recall_at_k(ranks, k) for k in range(1, size + 1)]
            assert all(a <= b for a, b in zip(values, values[1:]))
            assert values[-1] == 1.0  # every rank <= store size


class TestMeanReciprocalRank:
    def test_hand_arithmetic_example(self):
        expected = (1 + 1 / 3 + 1 / 7) / 3  # 0.4920634920...
        assert mean_reciprocal_rank([1, 3, 7]) == pytest.approx(expected, abs=1e-9)
        assert mean_reciprocal_rank([1, 3, 7]) == pytest.approx(0.492063492063, abs=1e-9)

    def test_all_top(self):
        assert mean_reciprocal_rank([1, 1]) == 1.0

    def test_single_case(self):
        assert mean_reciprocal_rank([4]) == 0.25

    def test_permutation_invariant(self):
        assert mean_reciprocal_rank([7, 1, 3]) == mean_reciprocal_rank([1, 3, 7])

    def test_in_unit_interval(self):
        rng = SplitMix64(13)
        for _ in range(50):
            ranks = [rng.next_int(1, 50) for _ in range(rng.next_int(1, 20))]
            assert 0.0 < mean_reciprocal_rank(ranks) <= 1.0

    def test_empty_cases_rejected(self):
        with pytest.raises(EmptyCasesError):
            mean_reciprocal_rank([])


def labeled_episode(gold_text, distractor_text, turn_text="blue kayak"):
    """One 8-turn session whose turn 4 references a gold text memory."""
    graph = MemoryGraph()
    gold = MemoryUnit(id="m-gold", owner="alice", session_of_origin=0,
                      kind="text", text=gold_text, about="Bob")
    distractor = MemoryUnit(id="m-noise", owner="alice", session_of_origin=0,
                            kind="text", text=distractor_text, about="Bob")
    graph.add_unit(gold)
    graph.add_unit(distractor)
    turns = []
    for i in range(8):
        turns.append(Turn(
            index=i, speaker=("alice", "bob", "cara")[i % 3],
            text=turn_text,
            introduces="img-0" if i == 2 else ("aud-0" if i == 5 else None),
            memory_refs=("m-gold",) if i == 4 else (),
        ))
    session = Session(index=0, main_speaker="alice", partners=("bob", "cara"),
                      modality_slots=("img-0", "aud-0"), turns=tuple(turns))
    episode = Episode(id="ep-eval", speakers=SPEAKERS, main_speaker="alice",
                      sessions=(session,), intervals=())
    return episode, graph


class TestEvalRetrieval:
    def test_gold_matching_context_wins(self):
        # gold shares the context's words; distractor is disjoint
        episode, graph = labeled_episode("alice bob cara blue kayak",
                                         "orange lantern glowing")
        report = eval_retrieval([(episode, graph)], HashingEmbedder(128))
        assert report.n_cases == 1
        assert report.r_at_1 == 1.0
        assert report.by_kind["text"].n_cases == 1

    def test_adversarial_distractor_beats_gold(self):
        episode, graph = labeled_episode("orange lantern glowing",
                                         "alice bob cara blue kayak")
        report = eval_retrieval([(episode, graph)], HashingEmbedder(128))
        assert report.r_at_1 == 0.0
        assert report.r_at_5 == 1.0  # store of 2: gold at rank 2
        assert report.mrr == pytest.approx(0.5)
        (kind, rank), = gold_ranks([(episode, graph)], HashingEmbedder(128))
        assert (kind, rank) == ("text", 2)

    def test_unlabeled_dataset_rejected(self):
        episode = make_episode()
        with pytest.raises(MissingGoldError):
            eval_retrieval([(episode, MemoryGraph())], HashingEmbedder(64))

    def test_report_shape_and_bounds(self):
        episode, graph = labeled_episode("alice bob cara blue kayak",
                                         "orange lantern glowing")
        data = eval_retrieval([(episode, graph)], HashingEmbedder(128)).to_dict()
        assert set(data.keys()) == {"r_at_1", "r_at_5", "mrr", "n_cases", "by_kind"}
        assert set(data["by_kind"].keys()) == {"image", "audio", "text"}
        assert 0.0 <= data["r_at_1"] <= data["r_at_5"] <= 1.0

    def test_deterministic(self):
        episode, graph = labeled_episode("alice bob cara blue kayak",
                                         "orange lantern glowing")
        a = eval_retrieval([(episode, graph)], HashingEmbedder(128))
        b = eval_retrieval([(episode, graph)], HashingEmbedder(128))
        assert a == b


class TestEvalNextSpeaker:
    def test_always_right_backend_scores_one(self):
        # fixture rotation puts cara at turn 6 of session 0
        episode = make_episode()
        assert episode.sessions[0].turns[6].speaker == "alice"
        backend = ScriptedBackend({"bids": {"0/6/alice": 0.99}})
        result = eval_next_speaker([(episode, MemoryGraph())], backend,
                                   n_samples=50, seed=3)
        assert result.accuracy == 1.0
        assert result.evaluated == 50
        assert result.skipped == 0

    def test_short_sessions_are_skipped(self):
        short = make_episode(turns_per_session=6)
        backend = ScriptedBackend({})
        with pytest.raises(InsufficientTurnsError):
            eval_next_speaker([(short, MemoryGraph())], backend, 10, seed=1)

    def test_random_bidder_is_near_one_third(self):
        # distinct episode ids give independent seeded draws per episode
        dataset = [(make_episode(episode_id=f"ep-{i:03d}"), MemoryGraph())
                   for i in range(300)]
        result = eval_next_speaker(dataset, RandomBidBackend(seed=17), 600, seed=5)
        assert abs(result.accuracy - 1 / 3) < 0.07


class TestKindMetrics:
    def test_empty_ranks_zeroed(self):
        metrics = KindMetrics.from_ranks([])
        assert metrics == KindMetrics(0.0, 0.0, 0.0, 0)
