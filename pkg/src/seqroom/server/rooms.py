"""Authoritative room sessions and the room registry.

A Room is a synchronous message processor: every handler takes one
decoded frame and returns the frames to deliver, as (client_id, Envelope)
pairs. It performs no I/O and never blocks, which is what makes the
single-writer discipline cheap: whatever hosts a room (the asyncio app,
or the in-process simulation) just has to call into it one frame at a
time. Distinct rooms share nothing and proceed independently.

Every state change is validated against the authoritative state, applied,
stamped with the next per-room sequence number, and broadcast to every
member including the author. Chat and presence share the same sequence
counter, so each room emits one gapless total order across all broadcast
kinds. Rejected operations produce a reject frame for the author only and
leave no trace in the broadcast stream.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

from .. import core
from ..protocol import Envelope, op_wire_decode
from ..core import DecodeError
from .config import ServerConfig

Outbound = list[tuple[str, Envelope]]


@dataclass
class Member:
    client_id: str
    name: str
    tokens: float
    refilled_at: float


class Room:
    def __init__(self, room_id: str, config: ServerConfig, clock: Callable[[], float] = time.monotonic):
        self.id = room_id
        self.config = config
        self.state = core.empty_state(bpm=config.default_bpm, steps=config.default_steps)
        self.next_seq = 1
        self.members: dict[str, Member] = {}
        self.chat_log: deque = deque(maxlen=config.chat_log_limit)
        self.action_log: deque = deque(maxlen=config.action_log_limit)
        self._clock = clock
        self._client_counter = 0

    # -- membership ---------------------------------------------------------

    def join(self, desired_name: str) -> tuple[str, Outbound]:
        """Admit a connection: snapshot to the joiner, presence to everyone."""
        self._client_counter += 1
        client_id = f"c{self._client_counter}"
        name = self._dedup_name(desired_name.strip() or "anon")
        self.members[client_id] = Member(
            client_id=client_id,
            name=name,
            tokens=self.config.rate_limit_ops_per_s or 0.0,
            refilled_at=self._clock(),
        )
        outbound: Outbound = [(client_id, self.snapshot_for(client_id))]
        outbound += self._broadcast(
            Envelope(
                type="presence",
                room=self.id,
                event="joined",
                name=name,
                count=len(self.members),
            )
        )
        return client_id, outbound

    def disconnect(self, client_id: str) -> Outbound:
        """Clean close and abrupt drop take the same path. State is retained
        even at zero members."""
        member = self.members.pop(client_id, None)
        if member is None:
            return []
        return self._broadcast(
            Envelope(
                type="presence",
                room=self.id,
                event="left",
                name=member.name,
                count=len(self.members),
            )
        )

    def _dedup_name(self, name: str) -> str:
        taken = {m.name for m in self.members.values()}
        if name not in taken:
            return name
        n = 2
        while f"{name} ({n})" in taken:
            n += 1
        return f"{name} ({n})"

    # -- frames --------------------------------------------------------------

    def handle_frame(self, client_id: str, env: Envelope) -> Outbound:
        if client_id not in self.members:
            return [(client_id, Envelope(type="error", reason="not_joined"))]
        if env.type == "op":
            return self._handle_op(client_id, env)
        if env.type == "chat":
            return self._handle_chat(client_id, env)
        if env.type == "resync":
            return [(client_id, self.snapshot_for(client_id))]
        if env.type == "ping":
            return [(client_id, Envelope(type="pong", room=self.id))]
        if env.type == "hello":
            return [(client_id, Envelope(type="error", reason="already_joined"))]
        return [(client_id, Envelope(type="error", reason="unexpected_kind", detail=env.type))]

    def _handle_op(self, client_id: str, env: Envelope) -> Outbound:
        member = self.members[client_id]
        try:
            op, op_id = op_wire_decode(env.payload)
        except DecodeError as err:
            return [(client_id, Envelope(type="error", reason="malformed", detail=str(err)))]

        if not self._take_token(member):
            return [(client_id, self._reject(op_id, "rate_limited"))]

        rejection = core.validate(
            self.state, op, env.epoch, max_tracks=self.config.max_tracks
        )
        if rejection is not None:
            return [(client_id, self._reject(op_id, rejection.reason, rejection.detail))]

        self.state = core.apply(self.state, op)
        seq = self._next_seq()
        self.action_log.append({"seq": seq, "client": member.name, "op": core.op_summary(op)})
        return self._broadcast(
            Envelope(
                type="op",
                room=self.id,
                seq=seq,
                epoch=self.state.epoch,
                client=client_id,
                payload=env.payload,
            ),
            preassigned_seq=True,
        )

    def _handle_chat(self, client_id: str, env: Envelope) -> Outbound:
        member = self.members[client_id]
        text = env.text or ""
        if not text:
            return [(client_id, self._reject(None, "empty"))]
        if len(text) > self.config.max_chat_len:
            return [(client_id, self._reject(None, "too_long"))]
        seq = self._next_seq()
        entry = {"seq": seq, "from": member.name, "text": text}
        self.chat_log.append(entry)
        return self._broadcast(
            Envelope(type="chat", room=self.id, seq=seq, from_name=member.name, text=text),
            preassigned_seq=True,
        )

    # -- helpers ---------------------------------------------------------------

    def snapshot_for(self, client_id: str) -> Envelope:
        """Full state for a joining or resyncing client. ``seq`` is the last
        broadcast sequence number the snapshot already incorporates."""
        return Envelope(
            type="snapshot",
            room=self.id,
            seq=self.next_seq - 1,
            client=client_id,
            state=core.state_to_obj(self.state),
            users=[m.name for m in self.members.values()],
            chat=list(self.chat_log)[-self.config.snapshot_chat_tail :],
        )

    def _reject(self, op_id: Optional[str], reason: str, detail: str = "") -> Envelope:
        return Envelope(
            type="reject", room=self.id, op_id=op_id, reason=reason, detail=detail or None
        )

    def _next_seq(self) -> int:
        seq = self.next_seq
        self.next_seq += 1
        return seq

    def _broadcast(self, env: Envelope, *, preassigned_seq: bool = False) -> Outbound:
        if not preassigned_seq:
            env.seq = self._next_seq()
        return [(client_id, env) for client_id in self.members]

    def _take_token(self, member: Member) -> bool:
        rate = self.config.rate_limit_ops_per_s
        if rate is None:
            return True
        now = self._clock()
        member.tokens = min(rate, member.tokens + (now - member.refilled_at) * rate)
        member.refilled_at = now
        if member.tokens >= 1.0:
            member.tokens -= 1.0
            return True
        return False

    def info(self) -> dict:
        return {
            "id": self.id,
            "user_count": len(self.members),
            "track_count": len(self.state.tracks),
        }


class RoomRegistry:
    """All live rooms. Rooms persist in memory even at zero occupancy."""

    def __init__(self, config: ServerConfig, clock: Callable[[], float] = time.monotonic):
        self.config = config
        self._clock = clock
        self.rooms: dict[str, Room] = {rid: Room(rid, config, clock) for rid in config.rooms}

    def get(self, room_id: str) -> Optional[Room]:
        """Look up a room, creating it on demand when dynamic rooms are on."""
        room = self.rooms.get(room_id)
        if room is None and self.config.allow_dynamic_rooms and room_id:
            room = Room(room_id, self.config, self._clock)
            self.rooms[room_id] = room
        return room

    def list_rooms(self) -> list[dict]:
        return [room.info() for room in self.rooms.values()]

    def snapshot_all(self) -> dict:
        return {rid: core.state_to_obj(room.state) for rid, room in self.rooms.items()}
