"""Command line entry point: run (autonomous), serve (external control),
replay (re-run from a manifest)."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import SimulationConfig
from .logio import read_manifest
from .server import serve
from .simulation import Simulation, run_simulation


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON config or run manifest")
    parser.add_argument("--seed", type=int, help="master random seed")
    parser.add_argument("--steps", type=int, help="number of time steps")
    parser.add_argument("--backend", choices=("mock", "http"), help="language model backend")
    parser.add_argument("--out", type=Path, help="output directory for run artifacts")
    parser.add_argument("--world", type=Path, help="world definition file")


def _load_config(args: argparse.Namespace) -> SimulationConfig:
    if args.config:
        config = read_manifest(args.config)
    else:
        config = SimulationConfig()
    if args.seed is not None:
        config.seed = args.seed
    if args.steps is not None:
        config.steps = args.steps
    if args.backend is not None:
        config.backend.mode = args.backend
    if args.out is not None:
        config.out_dir = str(args.out)
    if args.world is not None:
        config.world_path = str(args.world)
    config.validate()
    return config


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    simulation = run_simulation(config)
    ids, counts = simulation.world.interaction_matrix(simulation.agent_order)
    chats = sum(sum(row) for row in counts)
    filtered = sum(1 for r in simulation.records if r.filtered)
    print(
        f"completed {config.steps} steps x {len(config.agents)} agents: "
        f"{len(simulation.records)} records, {chats} chats, {filtered} filtered "
        f"({simulation.elapsed_seconds:.1f}s)"
    )
    print(simulation.ledger.snapshot_line())
    if config.out_dir:
        print(f"artifacts written to {config.out_dir}")
    if args.verbose:
        for record in simulation.records[-len(config.agents):]:
            print()
            print(record.to_text())
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    config = _load_config(args)
    host, _, port = args.listen.rpartition(":")
    serve(Simulation(config), host or "127.0.0.1", int(port))
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    if not args.config:
        print("replay requires --config pointing at a run manifest", file=sys.stderr)
        return 2
    return _cmd_run(args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irollan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="run an autonomous simulation")
    _add_common_flags(run_parser)
    run_parser.add_argument("--verbose", action="store_true", help="print the final step's records")
    run_parser.set_defaults(func=_cmd_run)

    serve_parser = sub.add_parser("serve", help="serve the JSON control endpoints")
    _add_common_flags(serve_parser)
    serve_parser.add_argument("--listen", default="127.0.0.1:8075", help="host:port to bind")
    serve_parser.set_defaults(func=_cmd_serve)

    replay_parser = sub.add_parser("replay", help="re-run a simulation from its manifest")
    _add_common_flags(replay_parser)
    replay_parser.add_argument("--verbose", action="store_true", help="print the final step's records")
    replay_parser.set_defaults(func=_cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
