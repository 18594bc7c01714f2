import csv
import json

import pytest

from m3c.cli import main
from m3c.memory import MemoryGraph
from m3c.model import scenario_to_dict

from conftest import make_scenario


@pytest.fixture
def catalog_file(tmp_path):
    path = tmp_path / "catalog.csv"
    rows = []
    for tag in ("harbor", "market", "park"):
        for i in range(8):
            rows.append({
                "id": f"{tag}-{i}",
                "kind": "image" if i % 2 == 0 else "audio",
                "caption": f"scene {i} unfolding at the {tag} with people around",
                "location_tag": tag,
                "asset_uri": f"assets/{tag}-{i}.bin",
            })
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    return path


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario_to_dict(make_scenario())), encoding="utf-8")
    return path


class TestGenCommand:
    def test_gen_writes_dataset(self, tmp_path, catalog_file, capsys):
        out = tmp_path / "out"
        code = main(["gen", "--catalog", str(catalog_file), "--episodes", "2",
                     "--seed", "11", "--out", str(out), "--k", "3"])
        assert code == 0
        assert (out / "episodes.jsonl").exists()
        assert (out / "provenance.jsonl").exists()
        assert "accepted" in capsys.readouterr().out

    def test_gen_two_workers_matches_one(self, tmp_path, catalog_file):
        out1 = tmp_path / "w1"
        out2 = tmp_path / "w2"
        main(["gen", "--catalog", str(catalog_file), "--episodes", "3",
              "--seed", "5", "--out", str(out1), "--k", "3", "--workers", "1"])
        main(["gen", "--catalog", str(catalog_file), "--episodes", "3",
              "--seed", "5", "--out", str(out2), "--k", "3", "--workers", "2"])
        assert (out1 / "episodes.jsonl").read_bytes() == \
            (out2 / "episodes.jsonl").read_bytes()


class TestRunCommand:
    def test_run_writes_episode_and_graph(self, tmp_path, scenario_file, capsys):
        out = tmp_path / "run"
        code = main(["run", "--scenario", str(scenario_file), "--seed", "9",
                     "--out", str(out)])
        assert code == 0
        assert (out / "episode.jsonl").exists()
        graph = MemoryGraph.load(out / "memory.json")
        assert len(graph.units()) > 0
        assert "sessions" in capsys.readouterr().out

    def test_run_is_reproducible(self, tmp_path, scenario_file):
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        main(["run", "--scenario", str(scenario_file), "--seed", "9", "--out", str(out1)])
        main(["run", "--scenario", str(scenario_file), "--seed", "9", "--out", str(out2)])
        assert (out1 / "episode.jsonl").read_bytes() == (out2 / "episode.jsonl").read_bytes()
        assert (out1 / "memory.json").read_bytes() == (out2 / "memory.json").read_bytes()


class TestEvalCommands:
    @pytest.fixture
    def dataset_dir(self, tmp_path, scenario_file):
        out = tmp_path / "data"
        main(["run", "--scenario", str(scenario_file), "--seed", "9", "--out", str(out)])
        # reshape the single-episode run into a dataset directory
        (out / "memory").mkdir()
        episode = json.loads((out / "episode.jsonl").read_text())
        (out / "episodes.jsonl").write_text(
            json.dumps(episode, separators=(",", ":")) + "\n", encoding="utf-8")
        (out / "memory" / f"{episode['id']}.json").write_bytes(
            (out / "memory.json").read_bytes())
        return out

    def test_eval_retrieval_report(self, tmp_path, dataset_dir, capsys):
        report_path = tmp_path / "report.json"
        code = main(["eval", "retrieval", "--data", str(dataset_dir),
                     "--embedder", "det", "--out", str(report_path)])
        assert code == 0
        report = json.loads(report_path.read_text())
        assert set(report.keys()) == {"r_at_1", "r_at_5", "mrr", "n_cases", "by_kind"}
        assert report["r_at_1"] <= report["r_at_5"]

    def test_eval_speaker(self, dataset_dir, capsys):
        code = main(["eval", "speaker", "--data", str(dataset_dir),
                     "--n", "50", "--seed", "3", "--backend", "random"])
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        assert 0.0 <= result["accuracy"] <= 1.0
        assert result["evaluated"] + result["skipped"] == 50
