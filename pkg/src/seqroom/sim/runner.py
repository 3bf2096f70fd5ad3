"""Simulation entry point and the broadcast-log replay checker."""

from __future__ import annotations

import asyncio
from typing import Optional

from .. import core
from ..protocol import Envelope, op_wire_decode
from ..server.config import ServerConfig
from .plan import SimPlan, SimReport


class SeqGapError(Exception):
    """The broadcast log is missing at least one sequence number."""


def replay_check(
    op_log: list[Envelope],
    initial_snapshot: str,
    final_snapshot: str,
    *,
    max_tracks: int = core.DEFAULT_MAX_TRACKS,
) -> bool:
    """True iff folding the op broadcasts over the initial snapshot
    reproduces the final snapshot byte for byte.

    The log must be the full broadcast stream (ops, chat, presence);
    only op entries touch the state, but every entry occupies a slot in
    the gapless sequence.
    """
    expected = None
    for env in op_log:
        if env.seq is None:
            raise SeqGapError("broadcast without a sequence number")
        if expected is not None and env.seq != expected:
            raise SeqGapError(f"expected seq {expected}, saw {env.seq}")
        expected = env.seq + 1

    state = core.snapshot_decode(initial_snapshot, max_tracks=max_tracks)
    for env in op_log:
        if env.type != "op":
            continue
        op, _ = op_wire_decode(env.payload)
        state = core.apply(state, op)
    return core.snapshot_encode(state) == final_snapshot


def run_sim(
    plan: SimPlan,
    *,
    endpoint: Optional[str] = None,
    in_process: bool = False,
    config: Optional[ServerConfig] = None,
) -> SimReport:
    """Run one simulation, in-process (deterministic) or over real sockets."""
    if in_process or endpoint is None:
        from .inprocess import InProcessSim

        return InProcessSim(plan, config).run()
    from .wsrunner import run_ws_sim

    max_tracks = config.max_tracks if config else core.DEFAULT_MAX_TRACKS
    return asyncio.run(run_ws_sim(plan, endpoint, max_tracks=max_tracks))
