"""Command-line entry points: `seqroom serve` and `seqroom sim run`."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional

from .server.config import config_from_sources
from .sim.plan import DEFAULT_MIX, SimPlan
from .sim.runner import run_sim


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqroom", description="Collaborative step-sequencer rooms")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the synchronization server")
    serve.add_argument("--port", type=int, default=8080)
    serve.add_argument("--host", default="0.0.0.0")
    serve.add_argument("--config", help="JSON config file (rooms, defaults)")
    serve.add_argument("--snapshot-dump", help="periodically dump room snapshots to this path")
    serve.add_argument("--log-level", default="info", choices=["debug", "info", "warning", "error"])
    serve.add_argument("--freesound-key", help="Freesound API key (overrides FREESOUND_API_KEY)")
    serve.add_argument("--static-dir", help="directory with the built web UI bundle")

    sim = sub.add_parser("sim", help="multi-client simulation and fuzzing")
    simsub = sim.add_subparsers(dest="sim_command", required=True)
    run = simsub.add_parser("run", help="run one simulation and report as JSON")
    run.add_argument("--seed", type=int, default=1)
    run.add_argument("--clients", type=int, default=2)
    run.add_argument("--ops", type=int, default=50, help="ops per client")
    run.add_argument("--mix", help="JSON object of op-kind weights")
    run.add_argument("--endpoint", help="server base URL, e.g. ws://127.0.0.1:8080")
    run.add_argument("--in-process", action="store_true", help="deterministic in-process transport")
    run.add_argument("--rooms", type=int, default=1)
    run.add_argument(
        "--room-names",
        help="comma-separated room ids to target (default: room0, room1, ...)",
    )
    run.add_argument("--think-ms", default="1:5", help="think time range, lo:hi milliseconds")
    run.add_argument("--settle-ms", type=float, default=500.0)
    run.add_argument("--chat-probability", type=float, default=0.0)
    run.add_argument("--rogue-clients", type=int, default=0)
    return parser


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server.app import create_app

    config = config_from_sources(
        config_path=args.config,
        port=args.port,
        snapshot_dump_path=args.snapshot_dump,
        log_level=args.log_level,
        freesound_key=args.freesound_key,
        static_dir=args.static_dir,
    )
    logging.basicConfig(level=config.log_level.upper())
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=config.port, log_level=config.log_level)
    return 0


def cmd_sim_run(args: argparse.Namespace) -> int:
    try:
        lo, _, hi = args.think_ms.partition(":")
        think = (float(lo), float(hi or lo))
        plan = SimPlan(
            seed=args.seed,
            clients=args.clients,
            ops_per_client=args.ops,
            op_mix=json.loads(args.mix) if args.mix else dict(DEFAULT_MIX),
            think_time_ms=think,
            rooms=args.rooms,
            room_ids=args.room_names.split(",") if args.room_names else None,
            settle_ms=args.settle_ms,
            chat_probability=args.chat_probability,
            rogue_clients=args.rogue_clients,
        )
        plan.validate()
    except (ValueError, json.JSONDecodeError) as err:
        print(f"invalid plan: {err}", file=sys.stderr)
        return 2

    if not args.in_process and not args.endpoint:
        print("either --endpoint or --in-process is required", file=sys.stderr)
        return 2

    report = run_sim(plan, endpoint=args.endpoint, in_process=args.in_process)
    print(json.dumps(report.to_obj(), indent=2))
    if report.errors and not report.final_snapshot_hashes:
        return 2
    return 0 if report.passed else 1


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    if args.command == "sim" and args.sim_command == "run":
        return cmd_sim_run(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
