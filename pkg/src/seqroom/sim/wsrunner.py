"""Multi-client simulation over real WebSocket connections.

Same clients and assertions as the in-process transport, but driven by
asyncio tasks against a live server endpoint. Interleavings here depend
on the network and scheduler, so runs are not seed-reproducible; what
must still hold is every convergence and ordering property.
"""

from __future__ import annotations

import asyncio
import random
import time
import urllib.parse
from dataclasses import dataclass, field
from typing import Optional

from .. import core
from ..protocol import ClientReplica, Envelope, ProtocolViolation, decode_message, encode_message
from .plan import SOUND_POOL, SimPlan, SimReport, random_op, snapshot_hash


@dataclass
class _Actor:
    label: str
    room_id: str
    name: str
    replica: ClientReplica
    quota: int = 0
    sent: int = 0
    observer: bool = False
    ws: Optional[object] = None
    recv_task: Optional[asyncio.Task] = None
    got_snapshot: Optional[asyncio.Event] = None
    log: list[Envelope] = field(default_factory=list)
    initial_snapshot: Optional[str] = None


def _ws_url(endpoint: str, room: str, name: str) -> str:
    base = endpoint.rstrip("/")
    if not base.endswith("/ws"):
        base += "/ws"
    return f"{base}?room={urllib.parse.quote(room)}&name={urllib.parse.quote(name)}"


async def run_ws_sim(plan: SimPlan, endpoint: str, *, max_tracks: int = core.DEFAULT_MAX_TRACKS) -> SimReport:
    import websockets

    plan.validate()
    if plan.rogue_clients:
        raise ValueError("rogue clients are only supported on the in-process transport")
    rng = random.Random(plan.seed)
    report = SimReport()
    room_ids = plan.resolved_room_ids()
    last_activity = time.monotonic()

    actors: list[_Actor] = []
    for room_id in room_ids:
        actors.append(
            _Actor(
                label=f"{room_id}/observer",
                room_id=room_id,
                name="observer",
                replica=ClientReplica(max_tracks=max_tracks),
                observer=True,
            )
        )
    for i in range(plan.clients):
        room_id = room_ids[i % len(room_ids)]
        actors.append(
            _Actor(
                label=f"{room_id}/user{i}",
                room_id=room_id,
                name=f"user{i}",
                replica=ClientReplica(max_tracks=max_tracks),
                quota=plan.ops_per_client,
            )
        )

    async def recv_loop(actor: _Actor) -> None:
        nonlocal last_activity
        async for raw in actor.ws:
            last_activity = time.monotonic()
            env = decode_message(raw)
            if env.room is not None and env.room != actor.room_id:
                report.isolation_violations += 1
                continue
            if env.type == "error":
                report.errors.append(f"{actor.label}: server error frame: {env.reason}")
                continue
            try:
                responses = actor.replica.handle(env)
            except ProtocolViolation as err:
                report.errors.append(f"{actor.label}: {err}")
                return
            if actor.observer and env.type in ("op", "chat", "presence") and actor.replica.last_seq == env.seq:
                actor.log.append(env)
            if env.type == "snapshot":
                if actor.initial_snapshot is None:
                    actor.initial_snapshot = core.snapshot_encode(actor.replica.confirmed)
                actor.got_snapshot.set()
            for response in responses:
                await actor.ws.send(encode_message(response))

    async def await_snapshot(actor: _Actor, timeout: float = 10.0) -> bool:
        """True once the join snapshot arrives; False if the connection dies
        or times out first (e.g. an error frame followed by a server close)."""
        waiter = asyncio.ensure_future(actor.got_snapshot.wait())
        await asyncio.wait(
            {waiter, actor.recv_task}, timeout=timeout, return_when=asyncio.FIRST_COMPLETED
        )
        waiter.cancel()
        return actor.got_snapshot.is_set()

    async def think_loop(actor: _Actor) -> None:
        nonlocal last_activity
        if not await await_snapshot(actor):
            report.errors.append(f"{actor.label}: no snapshot; cannot send ops")
            return
        lo, hi = plan.think_time_ms
        while actor.sent < actor.quota:
            if actor.recv_task.done():
                report.errors.append(f"{actor.label}: connection closed mid-run")
                return
            if (
                actor.replica.needs_resync
                or actor.replica.confirmed is None
                or actor.replica.has_pending_structural()
            ):
                await asyncio.sleep(0.005)
                continue
            if plan.chat_probability and rng.random() < plan.chat_probability:
                env = actor.replica.chat(f"[{actor.room_id}] note from {actor.name}")
            else:
                op = random_op(
                    rng,
                    actor.replica.confirmed,
                    plan.op_mix,
                    max_tracks=max_tracks,
                    sound_pool=SOUND_POOL,
                )
                env = actor.replica.prepare_op(op)
                actor.sent += 1
                report.ops_sent += 1
            await actor.ws.send(encode_message(env))
            last_activity = time.monotonic()
            await asyncio.sleep(rng.uniform(lo, hi) / 1000.0)

    started = time.perf_counter()
    try:
        for actor in actors:
            actor.got_snapshot = asyncio.Event()
            actor.ws = await websockets.connect(_ws_url(endpoint, actor.room_id, actor.name))
            actor.recv_task = asyncio.create_task(recv_loop(actor))
            if actor.observer:
                # The observer's join snapshot is the replay baseline; it must
                # be on the wire before anyone else starts mutating the room.
                if not await await_snapshot(actor):
                    raise ConnectionError(f"{actor.label}: no snapshot from server")
    except (OSError, ConnectionError, asyncio.TimeoutError) as err:
        report.errors.append(f"connection failed: {err}")
        for actor in actors:
            if actor.recv_task:
                actor.recv_task.cancel()
            if actor.ws:
                await actor.ws.close()
        report.wall_time_s = time.perf_counter() - started
        return report

    thinkers = [asyncio.create_task(think_loop(a)) for a in actors if not a.observer]
    await asyncio.gather(*thinkers)

    # Quiescence: no frames observed anywhere for the settle window.
    settle_s = plan.settle_ms / 1000.0
    while time.monotonic() - last_activity < settle_s:
        await asyncio.sleep(settle_s / 5)

    for actor in actors:
        replica = actor.replica
        if replica.confirmed is None:
            report.errors.append(f"{actor.label}: never received a snapshot")
            continue
        if replica.pending:
            report.errors.append(f"{actor.label}: finished with {len(replica.pending)} pending ops")
        report.final_snapshot_hashes[actor.label] = snapshot_hash(replica.visible_snapshot())
        report.seq_gaps += replica.seq_gaps
        report.resyncs += replica.resyncs
        report.discipline_violations += replica.discipline_violations
        for reason, count in replica.rejects.items():
            report.rejects[reason] = report.rejects.get(reason, 0) + count

    # One auditor join per room reads the authoritative snapshot.
    finals: dict[str, str] = {}
    for room_id in room_ids:
        try:
            ws = await websockets.connect(_ws_url(endpoint, room_id, "auditor"))
            try:
                while True:
                    env = decode_message(await asyncio.wait_for(ws.recv(), timeout=10))
                    if env.type == "snapshot":
                        finals[room_id] = core.snapshot_encode(
                            core.state_from_obj(env.state, max_tracks=max_tracks)
                        )
                        break
            finally:
                await ws.close()
        except (OSError, asyncio.TimeoutError) as err:
            report.errors.append(f"auditor for {room_id} failed: {err}")
            continue
        report.server_snapshot_hashes[room_id] = snapshot_hash(finals[room_id])

    report.converged = len(report.final_snapshot_hashes) == len(actors) and all(
        report.final_snapshot_hashes[a.label] == report.server_snapshot_hashes.get(a.room_id)
        for a in actors
    )

    from .runner import SeqGapError, replay_check

    report.replay_ok = True
    for actor in actors:
        if not actor.observer:
            continue
        report.ops_applied += sum(1 for env in actor.log if env.type == "op")
        if actor.room_id not in finals:
            report.replay_ok = False
            continue
        try:
            ok = replay_check(
                actor.log, actor.initial_snapshot, finals[actor.room_id], max_tracks=max_tracks
            )
        except SeqGapError as err:
            ok = False
            report.errors.append(f"{actor.room_id}: replay gap: {err}")
        if not ok:
            report.replay_ok = False

    for actor in actors:
        if actor.recv_task:
            actor.recv_task.cancel()
        if actor.ws:
            await actor.ws.close()
    report.wall_time_s = time.perf_counter() - started
    return report
