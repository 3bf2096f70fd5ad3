"""Wire format and session semantics.

One JSON object per WebSocket text frame. Every frame is an envelope
carrying a protocol version, a message kind, and kind-specific fields;
operation payloads travel nested under ``payload`` with a client-assigned
``op_id`` so authors can recognize their own echoes.

The server assigns a single per-room sequence number to every broadcast
(ops, chat, presence alike), so each client observes one gapless total
order. ClientReplica implements the client side of that contract:
optimistic preview for non-structural ops, echo-confirmation for
structural ones, and snapshot resync as the universal recovery.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from . import core
from .core import DecodeError, Op

PROTOCOL_VERSION = 1

KINDS = (
    "hello",
    "snapshot",
    "op",
    "reject",
    "chat",
    "presence",
    "ping",
    "pong",
    "resync",
    "error",
)

# Fields that must be present on an incoming frame of each kind,
# regardless of direction. Direction-specific requirements (e.g. seq on
# server->client op broadcasts) are enforced where the direction is known.
REQUIRED_FIELDS: dict[str, tuple[str, ...]] = {
    "hello": ("room", "desired_name"),
    "snapshot": ("state", "seq"),
    "op": ("epoch", "payload"),
    "reject": ("reason",),
    "chat": ("text",),
    "presence": ("event", "name", "count"),
    "ping": (),
    "pong": (),
    "resync": (),
    "error": ("reason",),
}

# Attribute name -> wire key ("from" is reserved in Python).
_WIRE_KEYS = {"from_name": "from"}
_ATTR_KEYS = {v: k for k, v in _WIRE_KEYS.items()}

# Serialization order after "v" and "type".
_FIELD_ORDER = (
    "room",
    "seq",
    "epoch",
    "client",
    "desired_name",
    "state",
    "users",
    "chat",
    "payload",
    "op_id",
    "reason",
    "detail",
    "from_name",
    "text",
    "event",
    "name",
    "count",
)


@dataclass
class Envelope:
    """One wire message. Unused fields stay None and are not serialized."""

    type: str
    v: int = PROTOCOL_VERSION
    room: Optional[str] = None
    seq: Optional[int] = None
    epoch: Optional[int] = None
    client: Optional[str] = None
    desired_name: Optional[str] = None
    state: Optional[dict] = None
    users: Optional[list] = None
    chat: Optional[list] = None
    payload: Optional[dict] = None
    op_id: Optional[str] = None
    reason: Optional[str] = None
    detail: Optional[str] = None
    from_name: Optional[str] = None
    text: Optional[str] = None
    event: Optional[str] = None
    name: Optional[str] = None
    count: Optional[int] = None


def encode_message(env: Envelope) -> str:
    obj: dict = {"v": env.v, "type": env.type}
    for attr in _FIELD_ORDER:
        value = getattr(env, attr)
        if value is not None:
            obj[_WIRE_KEYS.get(attr, attr)] = value
    return json.dumps(obj, separators=(",", ":"))


def decode_message(text: str) -> Envelope:
    """Parse one frame. Unknown kinds fail; unknown extra fields are ignored."""
    try:
        obj = json.loads(text)
    except (json.JSONDecodeError, TypeError) as err:
        raise DecodeError("malformed_json", str(err)) from err
    if not isinstance(obj, dict):
        raise DecodeError("malformed_json", "frame must be a JSON object")
    kind = obj.get("type")
    if kind is None:
        raise DecodeError("missing_field", "type")
    if kind not in KINDS:
        raise DecodeError("unknown_kind", str(kind))
    for key in REQUIRED_FIELDS[kind]:
        if obj.get(key) is None:
            raise DecodeError("missing_field", f"{kind}.{key}")
    env = Envelope(type=kind)
    if "v" in obj:
        env.v = obj["v"]
    for key, value in obj.items():
        attr = _ATTR_KEYS.get(key, key)
        if attr in ("v", "type"):
            continue
        if hasattr(env, attr) and attr in Envelope.__dataclass_fields__:
            setattr(env, attr, value)
    return env


# ---------------------------------------------------------------------------
# Operation payloads


def op_wire_encode(op: Op, op_id: str) -> dict:
    kind = core.op_kind(op)
    payload: dict = {"kind": kind}
    if isinstance(op, core.SetStep):
        payload.update(track=op.track, step=op.step, active=op.active)
    elif isinstance(op, core.SetGain):
        payload.update(track=op.track, gain=op.gain)
    elif isinstance(op, core.AddTrack):
        payload["sound"] = core.sound_to_obj(op.sound) if op.sound else None
    elif isinstance(op, core.RemoveTrack):
        payload["track"] = op.track
    elif isinstance(op, core.LoadSample):
        payload.update(track=op.track, sound=core.sound_to_obj(op.sound))
    elif isinstance(op, core.SetSegment):
        payload.update(track=op.track, start_s=op.start_s, end_s=op.end_s)
    elif isinstance(op, core.SetBpm):
        payload["bpm"] = op.bpm
    payload["op_id"] = op_id
    return payload


def _field(payload: dict, key: str, types, kind: str):
    # Wrong type counts as missing: the typed field the op needs is not there.
    if key not in payload:
        raise DecodeError("missing_field", f"{kind}.{key}")
    value = payload[key]
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise DecodeError("missing_field", f"{kind}.{key} has wrong type")
    if not isinstance(value, types):
        raise DecodeError("missing_field", f"{kind}.{key} has wrong type")
    return value


def _sound_field(payload: dict, kind: str) -> core.SoundRef:
    """Typed extraction of a nested sound. Value invariants (positive id,
    positive duration) are left for validate, like every other range."""
    raw = _field(payload, "sound", dict, kind)
    where = f"{kind}.sound"
    return core.SoundRef(
        freesound_id=_field(raw, "freesound_id", int, where),
        name=_field(raw, "name", str, where),
        duration_s=_field(raw, "duration_s", (int, float), where),
        preview_url=_field(raw, "preview_url", str, where),
        username=_field(raw, "username", str, where),
        license=_field(raw, "license", str, where),
    )


def op_wire_decode(payload: dict) -> tuple[Op, str]:
    """Decode an op payload. Range checking is validate's job, not this one's."""
    if not isinstance(payload, dict):
        raise DecodeError("missing_field", "payload must be an object")
    kind = payload.get("kind")
    if kind is None:
        raise DecodeError("missing_field", "payload.kind")
    op_id = payload.get("op_id", "")
    if not isinstance(op_id, str):
        raise DecodeError("missing_field", "payload.op_id")

    number = (int, float)
    if kind == "set_step":
        op: Op = core.SetStep(
            track=_field(payload, "track", int, kind),
            step=_field(payload, "step", int, kind),
            active=_field(payload, "active", bool, kind),
        )
    elif kind == "set_gain":
        op = core.SetGain(
            track=_field(payload, "track", int, kind),
            gain=_field(payload, "gain", number, kind),
        )
    elif kind == "add_track":
        sound = _sound_field(payload, kind) if payload.get("sound") is not None else None
        op = core.AddTrack(sound=sound)
    elif kind == "remove_track":
        op = core.RemoveTrack(track=_field(payload, "track", int, kind))
    elif kind == "load_sample":
        op = core.LoadSample(
            track=_field(payload, "track", int, kind),
            sound=_sound_field(payload, kind),
        )
    elif kind == "set_segment":
        op = core.SetSegment(
            track=_field(payload, "track", int, kind),
            start_s=_field(payload, "start_s", number, kind),
            end_s=_field(payload, "end_s", number, kind),
        )
    elif kind == "set_bpm":
        op = core.SetBpm(bpm=_field(payload, "bpm", number, kind))
    else:
        raise DecodeError("unknown_kind", str(kind))
    return op, op_id


# ---------------------------------------------------------------------------
# Client apply discipline


class ProtocolViolation(Exception):
    """The ordered broadcast stream contradicted the local replica.

    Must be surfaced: it means either the server or this replica broke
    the apply contract, and silently continuing would hide divergence.
    """


@dataclass
class PendingOp:
    op_id: str
    op: Op
    structural: bool
    track_count_at_send: int


@dataclass
class ChatEntry:
    seq: int
    from_name: str
    text: str


class ClientReplica:
    """Client-side state replica driven by the server's broadcast stream.

    ``confirmed`` is exactly the fold of the server's op log; the visible
    state adds locally-issued non-structural ops that are still awaiting
    their echo, so the author sees those immediately. Structural ops are
    never previewed: a row appears or disappears only when the server's
    broadcast comes back. When an echo arrives it moves its op from the
    pending preview into the confirmed log, which leaves the visible
    state unchanged; it is never applied twice.

    Methods that react to incoming frames return the frames the client
    should send in response (at most a resync request).
    """

    def __init__(self, *, max_tracks: int = core.DEFAULT_MAX_TRACKS):
        self.max_tracks = max_tracks
        self.room: Optional[str] = None
        self.client_id: Optional[str] = None
        self.confirmed: Optional[core.SequencerState] = None
        self.last_seq = 0
        self.pending: list[PendingOp] = []
        self.needs_resync = True
        self.users: list[str] = []
        self.chat_log: list[ChatEntry] = []
        self.seq_gaps = 0
        self.resyncs = 0
        self.ops_applied = 0
        self.rejects: dict[str, int] = {}
        self.discipline_violations = 0
        self._op_counter = 0

    # -- outgoing ----------------------------------------------------------

    def hello(self, room: str, desired_name: str) -> Envelope:
        self.room = room
        return Envelope(type="hello", room=room, desired_name=desired_name)

    def next_op_id(self) -> str:
        self._op_counter += 1
        return f"{self.client_id or 'pre'}-{self._op_counter}"

    def prepare_op(self, op: Op) -> Envelope:
        """Stage a local operation and build its wire envelope.

        Non-structural ops join the optimistic preview immediately;
        structural ops only join the pending list and take effect at echo.
        """
        if self.confirmed is None:
            raise ProtocolViolation("cannot issue ops before the first snapshot")
        op_id = self.next_op_id()
        self.pending.append(
            PendingOp(
                op_id=op_id,
                op=op,
                structural=core.structural(op),
                track_count_at_send=len(self.confirmed.tracks),
            )
        )
        return Envelope(
            type="op",
            room=self.room,
            epoch=self.confirmed.epoch,
            payload=op_wire_encode(op, op_id),
        )

    def chat(self, text: str) -> Envelope:
        return Envelope(type="chat", room=self.room, text=text)

    def has_pending_structural(self) -> bool:
        """True while one of our own add/remove ops awaits its echo.

        Ops issued in that window would carry an epoch our own structural
        op is about to invalidate, so a well-behaved client holds fire."""
        return any(p.structural for p in self.pending)

    def request_resync(self) -> Envelope:
        self.needs_resync = True
        self.resyncs += 1
        return Envelope(type="resync", room=self.room)

    # -- state views -------------------------------------------------------

    def visible_state(self) -> core.SequencerState:
        """Confirmed log plus still-valid pending non-structural previews."""
        if self.confirmed is None:
            raise ProtocolViolation("no snapshot applied yet")
        state = self.confirmed
        for entry in self.pending:
            if entry.structural:
                continue
            if core.validate(state, entry.op, state.epoch, max_tracks=self.max_tracks) is None:
                state = core.apply(state, entry.op)
        return state

    def visible_snapshot(self) -> str:
        return core.snapshot_encode(self.visible_state())

    # -- incoming ----------------------------------------------------------

    def handle(self, env: Envelope) -> list[Envelope]:
        if env.type == "snapshot":
            return self._on_snapshot(env)
        if env.type in ("op", "chat", "presence"):
            return self._on_broadcast(env)
        if env.type == "reject":
            return self._on_reject(env)
        # pong / error frames carry no replica state.
        return []

    def _on_snapshot(self, env: Envelope) -> list[Envelope]:
        self.confirmed = core.state_from_obj(env.state, max_tracks=self.max_tracks)
        self.last_seq = env.seq
        self.pending.clear()
        self.needs_resync = False
        if env.client is not None:
            self.client_id = env.client
        if env.users is not None:
            self.users = list(env.users)
        if env.chat:
            self.chat_log = [
                ChatEntry(seq=c.get("seq", 0), from_name=c.get("from", ""), text=c.get("text", ""))
                for c in env.chat
            ]
        return []

    def _on_broadcast(self, env: Envelope) -> list[Envelope]:
        if self.needs_resync:
            # Everything up to the awaited snapshot is superseded by it.
            return []
        if env.seq is None:
            raise ProtocolViolation(f"broadcast {env.type} without seq")
        if env.seq != self.last_seq + 1:
            self.seq_gaps += 1
            return [self.request_resync()]
        self.last_seq = env.seq

        if env.type == "op":
            return self._apply_broadcast_op(env)
        if env.type == "chat":
            self.chat_log.append(
                ChatEntry(seq=env.seq, from_name=env.from_name or "", text=env.text or "")
            )
        elif env.type == "presence":
            if env.event == "joined":
                if env.name not in self.users:
                    self.users.append(env.name)
            elif env.event == "left":
                if env.name in self.users:
                    self.users.remove(env.name)
        return []

    def _apply_broadcast_op(self, env: Envelope) -> list[Envelope]:
        if env.client is None:
            raise ProtocolViolation("op broadcast without client id")
        op, op_id = op_wire_decode(env.payload)
        own = env.client == self.client_id
        entry = None
        if own:
            entry = next((p for p in self.pending if p.op_id == op_id), None)
            if entry is not None:
                self.pending.remove(entry)
                if entry.structural and len(self.confirmed.tracks) != entry.track_count_at_send:
                    # Author's layout must not have moved between send and echo.
                    self.discipline_violations += 1

        rej = core.validate(self.confirmed, op, self.confirmed.epoch, max_tracks=self.max_tracks)
        if rej is not None:
            raise ProtocolViolation(
                f"server-ordered op failed local validation: {rej.reason} ({rej.detail})"
            )
        self.confirmed = core.apply(self.confirmed, op)
        self.ops_applied += 1
        if self.confirmed.epoch != env.epoch:
            raise ProtocolViolation(
                f"epoch mismatch after applying seq {env.seq}: "
                f"local {self.confirmed.epoch} != broadcast {env.epoch}"
            )
        return []

    def _on_reject(self, env: Envelope) -> list[Envelope]:
        reason = env.reason or "unknown"
        self.rejects[reason] = self.rejects.get(reason, 0) + 1
        entry = next((p for p in self.pending if p.op_id == env.op_id), None)
        if entry is not None:
            # Roll back by resyncing from a fresh snapshot.
            self.pending.remove(entry)
            return [self.request_resync()]
        return []
