"""Simulation plans, random operation generation, and run reports."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field, asdict
from typing import Optional

from .. import core
from ..core import Op, SoundRef

DEFAULT_MIX: dict[str, float] = {
    "set_step": 6,
    "set_gain": 2,
    "add_track": 2,
    "remove_track": 1,
    "load_sample": 2,
    "set_segment": 1,
    "set_bpm": 1,
}

# Heavily exercises index reuse: adds and removes dominate.
STRUCTURAL_HEAVY_MIX: dict[str, float] = {
    "set_step": 5,
    "set_gain": 2,
    "add_track": 4,
    "remove_track": 4,
    "load_sample": 2,
    "set_segment": 1,
    "set_bpm": 1,
}

# Fixed pool of sounds the simulated users "drag in". Generated segments stay
# within the shortest duration so a racing load_sample can never invalidate
# them on value grounds (index races are already covered by the epoch guard).
SOUND_POOL: tuple[SoundRef, ...] = (
    SoundRef(1001, "kick-thump", 0.8, "https://cdn.example/previews/1001.mp3", "ana", "CC0"),
    SoundRef(1002, "snare-crack", 1.1, "https://cdn.example/previews/1002.mp3", "bo", "CC-BY"),
    SoundRef(1003, "hat-tick", 0.9, "https://cdn.example/previews/1003.mp3", "cai", "CC0"),
    SoundRef(1004, "guitar-pluck", 2.4, "https://cdn.example/previews/1004.mp3", "dee", "CC-BY"),
    SoundRef(1005, "bass-drop", 1.6, "https://cdn.example/previews/1005.mp3", "eli", "CC0"),
    SoundRef(1006, "clap-room", 1.0, "https://cdn.example/previews/1006.mp3", "fay", "CC-BY"),
)


@dataclass
class SimPlan:
    seed: int = 1
    clients: int = 2
    ops_per_client: int = 50
    op_mix: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_MIX))
    think_time_ms: tuple[float, float] = (1.0, 5.0)
    rooms: int = 1
    room_ids: Optional[list[str]] = None
    chat_probability: float = 0.0
    settle_ms: float = 500.0
    rogue_clients: int = 0

    def resolved_room_ids(self) -> list[str]:
        if self.room_ids:
            return list(self.room_ids)
        return [f"room{i}" for i in range(self.rooms)]

    def validate(self) -> None:
        if self.clients < 1:
            raise ValueError("clients must be >= 1")
        if self.ops_per_client < 0:
            raise ValueError("ops_per_client must be >= 0")
        if self.rooms < 1:
            raise ValueError("rooms must be >= 1")
        if self.room_ids is not None:
            if len(self.room_ids) != len(set(self.room_ids)) or not self.room_ids:
                raise ValueError("room_ids must be non-empty and unique")
            if len(self.room_ids) != self.rooms:
                self.rooms = len(self.room_ids)
        if any(w < 0 for w in self.op_mix.values()) or not any(
            w > 0 for w in self.op_mix.values()
        ):
            raise ValueError("op mix weights must be non-negative with at least one positive")
        unknown = set(self.op_mix) - set(core.OP_KINDS.values())
        if unknown:
            raise ValueError(f"unknown op kinds in mix: {sorted(unknown)}")
        lo, hi = self.think_time_ms
        if lo < 0 or hi < lo:
            raise ValueError("think_time_ms must be a non-negative (lo, hi) range")
        if self.rogue_clients < 0 or self.rogue_clients >= self.clients + 1:
            raise ValueError("rogue_clients must be >= 0 and leave at least one honest client")


@dataclass
class SimReport:
    converged: bool = False
    final_snapshot_hashes: dict[str, str] = field(default_factory=dict)
    server_snapshot_hashes: dict[str, str] = field(default_factory=dict)
    rejects: dict[str, int] = field(default_factory=dict)
    seq_gaps: int = 0
    ops_sent: int = 0
    ops_applied: int = 0
    wall_time_s: float = 0.0
    replay_ok: bool = False
    isolation_violations: int = 0
    discipline_violations: int = 0
    resyncs: int = 0
    errors: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            self.converged
            and self.seq_gaps == 0
            and self.replay_ok
            and self.isolation_violations == 0
            and self.discipline_violations == 0
            and not self.errors
        )

    def to_obj(self) -> dict:
        obj = asdict(self)
        obj["passed"] = self.passed
        return obj


def snapshot_hash(snapshot_text: str) -> str:
    return hashlib.sha256(snapshot_text.encode()).hexdigest()


def weighted_choice(rng: random.Random, weights: dict[str, float]) -> str:
    kinds = list(weights)
    return rng.choices(kinds, weights=[weights[k] for k in kinds], k=1)[0]


def random_op(
    rng: random.Random,
    state: core.SequencerState,
    mix: dict[str, float],
    *,
    max_tracks: int = core.DEFAULT_MAX_TRACKS,
    sound_pool: tuple[SoundRef, ...] = SOUND_POOL,
) -> Op:
    """Draw one operation that is valid against the given local state.

    Callers must pass the replica's confirmed state, not the optimistic
    view: then the server can reject the op only for a stale epoch.
    Indices and capacity are in range for any state with the same epoch,
    segment bounds fit every sound in the pool, and a sound present in
    the confirmed state cannot have been unloaded without an epoch bump.
    """
    feasible: dict[str, float] = {}
    with_sound = [i for i, t in enumerate(state.tracks) if t.sound is not None]
    for kind, weight in mix.items():
        if weight <= 0:
            continue
        if kind in ("set_step", "set_gain", "remove_track", "load_sample") and not state.tracks:
            continue
        if kind == "set_segment" and not with_sound:
            continue
        if kind == "add_track" and len(state.tracks) >= max_tracks:
            continue
        feasible[kind] = weight
    if feasible:
        kind = weighted_choice(rng, feasible)
    else:
        kind = "add_track" if len(state.tracks) < max_tracks else "set_bpm"

    if kind == "set_step":
        return core.SetStep(
            track=rng.randrange(len(state.tracks)),
            step=rng.randrange(state.steps),
            active=rng.random() < 0.5,
        )
    if kind == "set_gain":
        return core.SetGain(track=rng.randrange(len(state.tracks)), gain=rng.randrange(0, 1001) / 1000)
    if kind == "add_track":
        sound = rng.choice(sound_pool) if rng.random() < 0.7 else None
        return core.AddTrack(sound=sound)
    if kind == "remove_track":
        return core.RemoveTrack(track=rng.randrange(len(state.tracks)))
    if kind == "load_sample":
        return core.LoadSample(track=rng.randrange(len(state.tracks)), sound=rng.choice(sound_pool))
    if kind == "set_segment":
        min_dur_ms = int(min(s.duration_s for s in sound_pool) * 1000)
        start_ms = rng.randrange(0, min_dur_ms // 2)
        end_ms = rng.randrange(start_ms + 10, min_dur_ms + 1)
        return core.SetSegment(
            track=rng.choice(with_sound), start_s=start_ms / 1000, end_s=end_ms / 1000
        )
    return core.SetBpm(bpm=rng.randint(core.BPM_MIN, core.BPM_MAX))
