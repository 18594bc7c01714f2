"""Command-line entry points.

m3c gen      — run the dataset construction pipeline over a modality catalog
m3c run      — run one scripted/simulated episode offline
m3c eval     — retrieval metrics or next-speaker accuracy over a dataset
m3c serve    — start the HTTP service (optionally hosting the chat console)
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backends import (
    HashingEmbedder,
    RandomBidBackend,
    RemoteBackend,
    RemoteConfig,
    ScriptedBackend,
    SimulatedBackend,
)
from .backends.remote import RemoteEmbedder
from .errors import EpisodeAbortedError
from .evaluation import (
    eval_next_speaker,
    eval_retrieval,
    load_dataset,
    write_report,
)
from .model import (
    episode_to_dict,
    episode_to_json_line,
    scenario_from_dict,
)
from .orchestrator import DEFAULT_HORIZON, run_episode
from .pipeline import generate_dataset, load_catalog


def _build_backend(name: str, seed: int, config: str | None):
    if name == "simulated":
        return SimulatedBackend(seed=seed)
    if name == "scripted":
        return ScriptedBackend({})
    if name == "random":
        return RandomBidBackend(seed=seed)
    if name == "remote":
        if not config:
            raise SystemExit("--backend remote requires --config")
        return RemoteBackend(RemoteConfig.from_file(config))
    if name.endswith(".json"):  # a scripted backend from a script file
        return ScriptedBackend(json.loads(Path(name).read_text()))
    raise SystemExit(f"unknown backend: {name}")


def _build_embedder(name: str, dim: int, config: str | None):
    if name == "det":
        return HashingEmbedder(dim)
    if name == "remote":
        if not config:
            raise SystemExit("--embedder remote requires --config")
        return RemoteEmbedder.from_file(config)
    raise SystemExit(f"unknown embedder: {name}")


def cmd_gen(args) -> int:
    catalog = load_catalog(args.catalog)
    backend = _build_backend(args.backend, args.seed, args.config)
    judge = None
    if args.judge == "remote":
        if not args.config:
            raise SystemExit("--judge remote requires --config")
        judge = RemoteBackend(RemoteConfig.from_file(args.config))
    elif args.judge == "scripted":
        judge = ScriptedBackend({})
    result = generate_dataset(
        catalog, args.episodes, args.seed, args.out, backend,
        HashingEmbedder(args.dim), k=args.k, workers=args.workers, judge=judge)
    print(f"accepted {len(result.accepted)}  rejected {len(result.rejected)}  "
          f"skipped {result.skipped}")
    for reason, count in sorted(result.rejection_counts.items()):
        print(f"  reject {reason}: {count}")
    return 0


def cmd_run(args) -> int:
    scenario = scenario_from_dict(json.loads(Path(args.scenario).read_text()))
    backend = _build_backend(args.backend, args.seed, args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        episode, graph = run_episode(scenario, backend, HashingEmbedder(args.dim),
                                     args.seed, horizon=args.horizon)
    except EpisodeAbortedError as err:
        record = {"status": "aborted", "error": str(err.cause),
                  "episode": episode_to_dict(err.episode)}
        (out / "episode.aborted.json").write_text(
            json.dumps(record, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
        err.graph.save(out / "memory.json")
        print(f"aborted: {err.cause}", file=sys.stderr)
        return 1
    with open(out / "episode.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(episode_to_json_line(episode))
        fh.write("\n")
    graph.save(out / "memory.json")
    turns = sum(len(s.turns) for s in episode.sessions)
    print(f"episode {episode.id}: {len(episode.sessions)} sessions, {turns} turns, "
          f"{len(graph.units())} memories, {graph.link_count()} links")
    return 0


def cmd_eval_retrieval(args) -> int:
    dataset = load_dataset(args.data)
    embedder = _build_embedder(args.embedder, args.dim, args.config)
    report = eval_retrieval(dataset, embedder)
    if args.out:
        write_report(report, args.out)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_eval_speaker(args) -> int:
    dataset = load_dataset(args.data)
    backend = _build_backend(args.backend, args.seed, args.config)
    result = eval_next_speaker(dataset, backend, args.n, args.seed)
    print(json.dumps(result.to_dict(), indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    turn_delay = 0.0
    if args.config:
        path = Path(args.config)
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            data = tomllib.loads(path.read_text())
        else:
            data = json.loads(path.read_text())
        turn_delay = float(data.get("turn_delay_ms", 0)) / 1000.0
    app = create_app(turn_delay=turn_delay, console_dir=args.console)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="m3c")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a dataset from a modality catalog")
    gen.add_argument("--catalog", required=True)
    gen.add_argument("--episodes", type=int, required=True)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--judge", choices=["scripted", "remote"], default=None)
    gen.add_argument("--backend", default="simulated")
    gen.add_argument("--config")
    gen.add_argument("--k", type=int, default=30)
    gen.add_argument("--workers", type=int, default=1)
    gen.add_argument("--dim", type=int, default=256)
    gen.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", help="run one episode from a scenario file")
    run.add_argument("--scenario", required=True)
    run.add_argument("--seed", type=int, required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    run.add_argument("--backend", default="simulated")
    run.add_argument("--config")
    run.add_argument("--dim", type=int, default=256)
    run.set_defaults(func=cmd_run)

    ev = sub.add_parser("eval", help="evaluate a dataset")
    ev_sub = ev.add_subparsers(dest="what", required=True)

    ev_ret = ev_sub.add_parser("retrieval", help="R@1/R@5/MRR over labeled turns")
    ev_ret.add_argument("--data", required=True)
    ev_ret.add_argument("--embedder", choices=["det", "remote"], default="det")
    ev_ret.add_argument("--out")
    ev_ret.add_argument("--config")
    ev_ret.add_argument("--dim", type=int, default=256)
    ev_ret.set_defaults(func=cmd_eval_retrieval)

    ev_spk = ev_sub.add_parser("speaker", help="next-speaker prediction accuracy")
    ev_spk.add_argument("--data", required=True)
    ev_spk.add_argument("--n", type=int, default=1000)
    ev_spk.add_argument("--seed", type=int, required=True)
    ev_spk.add_argument("--backend", default="simulated")
    ev_spk.add_argument("--config")
    ev_spk.set_defaults(func=cmd_eval_speaker)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--port", type=int, default=8715)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--config")
    serve.add_argument("--console", help="directory with the built chat console")
    serve.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
