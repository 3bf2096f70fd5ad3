"""Deterministic multi-client simulation over an in-process transport.

No sockets and no real time: simulated clients talk to real Room
instances through a virtual-time event heap. Message latencies and think
times come from one seeded RNG, and per-connection delivery order is
FIFO in both directions (the WebSocket guarantee), so a seed fully
determines the interleaving, every reject, and the final state.

Each room gets a passive observer client that joins first, sends
nothing, and records the broadcast stream: it doubles as the liveness
probe (rooms must progress without it ever responding) and as the
replay-equivalence witness.
"""

from __future__ import annotations

import heapq
import itertools
import random
import time
from dataclasses import dataclass, field
from typing import Optional

from .. import core
from ..protocol import ClientReplica, Envelope, ProtocolViolation, decode_message, encode_message, op_wire_encode
from ..server.config import ServerConfig
from ..server.rooms import Room, RoomRegistry
from .plan import SOUND_POOL, SimPlan, SimReport, random_op, snapshot_hash

MAX_EVENTS = 2_000_000
LATENCY_RANGE_S = (0.0005, 0.004)


@dataclass
class SimClient:
    label: str
    room_id: str
    desired_name: str
    replica: ClientReplica
    quota: int = 0
    sent: int = 0
    rogue: bool = False
    observer: bool = False
    client_id: Optional[str] = None
    thinking: bool = False
    log: list[Envelope] = field(default_factory=list)
    initial_snapshot: Optional[str] = None
    rogue_counter: int = 0


class InProcessSim:
    def __init__(self, plan: SimPlan, config: Optional[ServerConfig] = None):
        plan.validate()
        self.plan = plan
        self.rng = random.Random(plan.seed)
        self.room_ids = plan.resolved_room_ids()
        if config is None:
            # Virtual time makes a wall-clock token bucket meaningless; honest
            # rejections must all come from the epoch guard.
            config = ServerConfig(rooms=self.room_ids, rate_limit_ops_per_s=None)
        elif not config.allow_dynamic_rooms:
            missing = [r for r in self.room_ids if r not in config.rooms]
            if missing:
                raise ValueError(f"server config lacks sim rooms: {missing}")
        self.config = config
        self.now = 0.0
        self.registry = RoomRegistry(config, clock=lambda: self.now)
        self.events: list = []
        self._tick = itertools.count()
        self._last_to_client: dict[str, float] = {}
        self._last_to_server: dict[str, float] = {}
        self._by_client_id: dict[tuple[str, str], SimClient] = {}
        self.report = SimReport()
        self.clients = self._build_clients()
        self.observers = {c.room_id: c for c in self.clients if c.observer}

    def _build_clients(self) -> list[SimClient]:
        clients: list[SimClient] = []
        room_ids = self.room_ids
        for room_id in room_ids:
            clients.append(
                SimClient(
                    label=f"{room_id}/observer",
                    room_id=room_id,
                    desired_name="observer",
                    replica=ClientReplica(max_tracks=self.config.max_tracks),
                    observer=True,
                )
            )
        for i in range(self.plan.clients):
            room_id = room_ids[i % len(room_ids)]
            rogue = i < self.plan.rogue_clients
            name = f"{'rogue' if rogue else 'user'}{i}"
            clients.append(
                SimClient(
                    label=f"{room_id}/{name}",
                    room_id=room_id,
                    desired_name=name,
                    replica=ClientReplica(max_tracks=self.config.max_tracks),
                    quota=self.plan.ops_per_client,
                    rogue=rogue,
                )
            )
        return clients

    # -- scheduling ----------------------------------------------------------

    def _schedule(self, when: float, kind: str, data) -> None:
        heapq.heappush(self.events, (when, next(self._tick), kind, data))

    def _latency(self) -> float:
        return self.rng.uniform(*LATENCY_RANGE_S)

    def _think_delay(self) -> float:
        lo, hi = self.plan.think_time_ms
        return self.rng.uniform(lo, hi) / 1000.0

    def _to_client(self, client: SimClient, env: Envelope) -> None:
        text = encode_message(env)
        when = max(self.now + self._latency(), self._last_to_client.get(client.label, 0.0))
        self._last_to_client[client.label] = when
        self._schedule(when, "deliver_client", (client, text))

    def _to_server(self, client: SimClient, env: Envelope) -> None:
        text = encode_message(env)
        when = max(self.now + self._latency(), self._last_to_server.get(client.label, 0.0))
        self._last_to_server[client.label] = when
        self._schedule(when, "deliver_server", (client, text))

    def _dispatch(self, room: Room, outbound) -> None:
        for client_id, env in outbound:
            target = self._by_client_id.get((room.id, client_id))
            if target is not None:
                self._to_client(target, env)

    # -- event handlers --------------------------------------------------------

    def _on_join(self, client: SimClient) -> None:
        room = self.registry.get(client.room_id)
        client.client_id, outbound = room.join(client.desired_name)
        self._by_client_id[(room.id, client.client_id)] = client
        self._dispatch(room, outbound)

    def _on_deliver_server(self, client: SimClient, text: str) -> None:
        room = self.registry.get(client.room_id)
        env = decode_message(text)
        self._dispatch(room, room.handle_frame(client.client_id, env))

    def _on_deliver_client(self, client: SimClient, text: str) -> None:
        env = decode_message(text)
        if env.room is not None and env.room != client.room_id:
            self.report.isolation_violations += 1
            return
        replica = client.replica
        try:
            responses = replica.handle(env)
        except ProtocolViolation as err:
            self.report.errors.append(f"{client.label}: {err}")
            return
        if client.observer and env.type in ("op", "chat", "presence") and replica.last_seq == env.seq:
            client.log.append(env)
        if env.type == "snapshot" and client.initial_snapshot is None:
            client.initial_snapshot = core.snapshot_encode(replica.confirmed)
        for response in responses:
            self._to_server(client, response)
        if (
            not client.observer
            and not client.thinking
            and replica.confirmed is not None
            and client.quota > 0
        ):
            client.thinking = True
            self._schedule(self.now + self._think_delay(), "think", client)

    def _on_think(self, client: SimClient) -> None:
        if client.sent >= client.quota:
            return
        replica = client.replica
        if replica.needs_resync or replica.confirmed is None or (
            not client.rogue and replica.has_pending_structural()
        ):
            # Hold fire until the fresh snapshot or the structural echo lands.
            self._schedule(self.now + self._think_delay(), "think", client)
            return
        if client.rogue:
            self._to_server(client, self._rogue_envelope(client))
            client.sent += 1
            self.report.ops_sent += 1
        elif self.plan.chat_probability and self.rng.random() < self.plan.chat_probability:
            text = f"[{client.room_id}] note {client.sent} from {client.desired_name}"
            self._to_server(client, replica.chat(text))
        else:
            op = random_op(
                self.rng,
                replica.confirmed,
                self.plan.op_mix,
                max_tracks=self.config.max_tracks,
                sound_pool=SOUND_POOL,
            )
            self._to_server(client, replica.prepare_op(op))
            client.sent += 1
            self.report.ops_sent += 1
        self._schedule(self.now + self._think_delay(), "think", client)

    def _rogue_envelope(self, client: SimClient) -> Envelope:
        """A deliberately invalid op: bad index, stale epoch, or bad value."""
        replica = client.replica
        state = replica.confirmed
        client.rogue_counter += 1
        op_id = f"{client.client_id}-rogue-{client.rogue_counter}"
        mode = self.rng.randrange(4)
        if mode == 0:
            op: core.Op = core.SetStep(track=len(state.tracks) + 7, step=0, active=True)
            epoch = state.epoch
        elif mode == 1:
            op = core.RemoveTrack(track=0)
            epoch = state.epoch + 13
        elif mode == 2:
            op = core.SetGain(track=0, gain=4.2) if state.tracks else core.SetGain(track=3, gain=0.5)
            epoch = state.epoch
        else:
            op = core.SetBpm(bpm=999)
            epoch = state.epoch
        return Envelope(
            type="op", room=client.room_id, epoch=epoch, payload=op_wire_encode(op, op_id)
        )

    # -- run -----------------------------------------------------------------

    def run(self) -> SimReport:
        from .runner import SeqGapError, replay_check

        started = time.perf_counter()
        for i, client in enumerate(self.clients):
            self._schedule(i * 0.0021, "join", client)

        handlers = {
            "join": self._on_join,
            "think": self._on_think,
            "deliver_server": lambda data: self._on_deliver_server(*data),
            "deliver_client": lambda data: self._on_deliver_client(*data),
        }
        processed = 0
        while self.events:
            processed += 1
            if processed > MAX_EVENTS:
                self.report.errors.append("event budget exceeded; simulation did not settle")
                break
            self.now, _, kind, data = heapq.heappop(self.events)
            handlers[kind](data)

        report = self.report
        report.wall_time_s = time.perf_counter() - started

        for room in self.registry.rooms.values():
            report.server_snapshot_hashes[room.id] = snapshot_hash(core.snapshot_encode(room.state))

        converged = True
        for client in self.clients:
            replica = client.replica
            if replica.confirmed is None:
                report.errors.append(f"{client.label}: never received a snapshot")
                converged = False
                continue
            if replica.pending:
                report.errors.append(f"{client.label}: finished with {len(replica.pending)} pending ops")
            digest = snapshot_hash(replica.visible_snapshot())
            report.final_snapshot_hashes[client.label] = digest
            if digest != report.server_snapshot_hashes.get(client.room_id):
                converged = False
            report.seq_gaps += replica.seq_gaps
            report.resyncs += replica.resyncs
            report.discipline_violations += replica.discipline_violations
            for reason, count in replica.rejects.items():
                report.rejects[reason] = report.rejects.get(reason, 0) + count
        report.converged = converged

        report.replay_ok = True
        for room_id, observer in self.observers.items():
            room = self.registry.get(room_id)
            report.ops_applied += sum(1 for env in observer.log if env.type == "op")
            try:
                ok = replay_check(
                    observer.log,
                    observer.initial_snapshot,
                    core.snapshot_encode(room.state),
                    max_tracks=self.config.max_tracks,
                )
            except SeqGapError as err:
                ok = False
                report.errors.append(f"{room_id}: replay gap: {err}")
            if not ok:
                report.replay_ok = False
        return report
