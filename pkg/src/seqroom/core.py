"""Deterministic sequencer state machine.

Single definition of the shared document (tracks, grid cells, gains,
sample assignments, tempo), the operations that mutate it, validation,
and the canonical JSON snapshot format. Everything here is a pure
function over immutable values: the server, the simulation harness and
any client replica all fold the same operations and must land on
byte-identical snapshots.

Index identity is positional: removing a track shifts every later track
down by one. The ``epoch`` counter ticks once per structural operation
(add/remove track) and lets validation reject any operation that was
issued against an outdated track layout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional, Union

DEFAULT_BPM = 120
DEFAULT_STEPS = 16
DEFAULT_GAIN = 0.8
DEFAULT_MAX_TRACKS = 16
BPM_MIN = 40
BPM_MAX = 240
ALLOWED_STEP_COUNTS = (8, 16, 32)
STEPS_PER_BEAT = 4

# Rejection reasons surfaced to clients.
STALE_EPOCH = "stale_epoch"
INDEX_OUT_OF_RANGE = "index_out_of_range"
VALUE_OUT_OF_RANGE = "value_out_of_range"

Number = Union[int, float]


class DecodeError(Exception):
    """Raised when wire text cannot be turned into a valid value.

    ``code`` is one of: malformed_json, missing_field,
    invariant_violation, unknown_kind.
    """

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {detail}" if detail else code)


class InvalidOperation(Exception):
    """An operation that failed validation reached apply(). Programming error."""


@dataclass(frozen=True)
class SoundRef:
    """Identity and playback metadata for one Freesound sound."""

    freesound_id: int
    name: str
    duration_s: Number
    preview_url: str
    username: str
    license: str


@dataclass(frozen=True)
class Segment:
    """Time region (seconds) within a track's sound that steps trigger."""

    start_s: Number
    end_s: Number


@dataclass(frozen=True)
class Track:
    cells: tuple[bool, ...]
    gain: Number = DEFAULT_GAIN
    sound: Optional[SoundRef] = None
    segment: Optional[Segment] = None


@dataclass(frozen=True)
class SequencerState:
    tracks: tuple[Track, ...] = ()
    bpm: Number = DEFAULT_BPM
    steps: int = DEFAULT_STEPS
    epoch: int = 0


def empty_state(bpm: Number = DEFAULT_BPM, steps: int = DEFAULT_STEPS) -> SequencerState:
    return SequencerState(tracks=(), bpm=bpm, steps=steps, epoch=0)


# ---------------------------------------------------------------------------
# Operations


@dataclass(frozen=True)
class SetStep:
    track: int
    step: int
    active: bool


@dataclass(frozen=True)
class SetGain:
    track: int
    gain: Number


@dataclass(frozen=True)
class AddTrack:
    sound: Optional[SoundRef] = None


@dataclass(frozen=True)
class RemoveTrack:
    track: int


@dataclass(frozen=True)
class LoadSample:
    track: int
    sound: SoundRef


@dataclass(frozen=True)
class SetSegment:
    track: int
    start_s: Number
    end_s: Number


@dataclass(frozen=True)
class SetBpm:
    bpm: Number


Op = Union[SetStep, SetGain, AddTrack, RemoveTrack, LoadSample, SetSegment, SetBpm]

OP_KINDS: dict[type, str] = {
    SetStep: "set_step",
    SetGain: "set_gain",
    AddTrack: "add_track",
    RemoveTrack: "remove_track",
    LoadSample: "load_sample",
    SetSegment: "set_segment",
    SetBpm: "set_bpm",
}


def op_kind(op: Op) -> str:
    return OP_KINDS[type(op)]


def structural(op: Op) -> bool:
    """True exactly for the operations that change the track array's shape."""
    return isinstance(op, (AddTrack, RemoveTrack))


def op_summary(op: Op) -> str:
    """One-line human summary for the action log."""
    if isinstance(op, SetStep):
        return f"set_step track={op.track} step={op.step} {'on' if op.active else 'off'}"
    if isinstance(op, SetGain):
        return f"set_gain track={op.track} gain={op.gain}"
    if isinstance(op, AddTrack):
        what = op.sound.name if op.sound else "empty"
        return f"add_track {what}"
    if isinstance(op, RemoveTrack):
        return f"remove_track track={op.track}"
    if isinstance(op, LoadSample):
        return f"load_sample track={op.track} {op.sound.name}"
    if isinstance(op, SetSegment):
        return f"set_segment track={op.track} [{op.start_s}, {op.end_s}]"
    if isinstance(op, SetBpm):
        return f"set_bpm {op.bpm}"
    raise TypeError(f"not an op: {op!r}")


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Rejection:
    reason: str
    detail: str = ""


def _is_number(x: object) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _sound_problem(sound: SoundRef) -> Optional[str]:
    if not isinstance(sound.freesound_id, int) or sound.freesound_id <= 0:
        return "sound.freesound_id must be a positive integer"
    if not _is_number(sound.duration_s) or not sound.duration_s > 0:
        return "sound.duration_s must be > 0"
    return None


def validate(
    state: SequencerState,
    op: Op,
    op_epoch: int,
    *,
    max_tracks: int = DEFAULT_MAX_TRACKS,
) -> Optional[Rejection]:
    """Check one operation against the authoritative state.

    Returns None when the operation may be applied, otherwise a
    Rejection naming why. Every operation except SetBpm either changes
    the track layout or addresses a track by index, so each of them
    must carry the epoch of the layout it was issued against; a
    mismatch means the client acted on stale indices.
    """
    if not isinstance(op, SetBpm) and op_epoch != state.epoch:
        return Rejection(STALE_EPOCH, f"op epoch {op_epoch} != state epoch {state.epoch}")

    if isinstance(op, (SetStep, SetGain, RemoveTrack, LoadSample, SetSegment)):
        if not 0 <= op.track < len(state.tracks):
            return Rejection(
                INDEX_OUT_OF_RANGE,
                f"track {op.track} not in [0, {len(state.tracks)})",
            )

    if isinstance(op, SetStep):
        if not 0 <= op.step < state.steps:
            return Rejection(INDEX_OUT_OF_RANGE, f"step {op.step} not in [0, {state.steps})")
    elif isinstance(op, SetGain):
        if not (_is_number(op.gain) and 0.0 <= op.gain <= 1.0):
            return Rejection(VALUE_OUT_OF_RANGE, f"gain {op.gain} not in [0, 1]")
    elif isinstance(op, AddTrack):
        if len(state.tracks) + 1 > max_tracks:
            return Rejection(VALUE_OUT_OF_RANGE, f"room full: {max_tracks} tracks max")
        if op.sound is not None:
            problem = _sound_problem(op.sound)
            if problem:
                return Rejection(VALUE_OUT_OF_RANGE, problem)
    elif isinstance(op, LoadSample):
        problem = _sound_problem(op.sound)
        if problem:
            return Rejection(VALUE_OUT_OF_RANGE, problem)
    elif isinstance(op, SetSegment):
        sound = state.tracks[op.track].sound
        if sound is None:
            return Rejection(VALUE_OUT_OF_RANGE, "segment requires a loaded sound")
        if not (
            _is_number(op.start_s)
            and _is_number(op.end_s)
            and 0 <= op.start_s < op.end_s <= sound.duration_s
        ):
            return Rejection(
                VALUE_OUT_OF_RANGE,
                f"segment [{op.start_s}, {op.end_s}] outside [0, {sound.duration_s}]",
            )
    elif isinstance(op, SetBpm):
        if not (_is_number(op.bpm) and BPM_MIN <= op.bpm <= BPM_MAX):
            return Rejection(VALUE_OUT_OF_RANGE, f"bpm {op.bpm} not in [{BPM_MIN}, {BPM_MAX}]")

    return None


# ---------------------------------------------------------------------------
# Application


def apply(state: SequencerState, op: Op) -> SequencerState:
    """Apply a validated operation, returning the successor state.

    Pure: the input state is never mutated. Callers must have run
    validate() first; an inapplicable op here is a programming error.
    """
    if isinstance(op, SetStep):
        track = _track_at(state, op.track)
        if not 0 <= op.step < state.steps:
            raise InvalidOperation(f"step {op.step} out of range")
        cells = track.cells[: op.step] + (op.active,) + track.cells[op.step + 1 :]
        return _with_track(state, op.track, replace(track, cells=cells))
    if isinstance(op, SetGain):
        return _with_track(state, op.track, replace(_track_at(state, op.track), gain=op.gain))
    if isinstance(op, AddTrack):
        new = Track(cells=(False,) * state.steps, gain=DEFAULT_GAIN, sound=op.sound, segment=None)
        return replace(state, tracks=state.tracks + (new,), epoch=state.epoch + 1)
    if isinstance(op, RemoveTrack):
        _track_at(state, op.track)
        tracks = state.tracks[: op.track] + state.tracks[op.track + 1 :]
        return replace(state, tracks=tracks, epoch=state.epoch + 1)
    if isinstance(op, LoadSample):
        # A segment is meaningless against a different sound's duration.
        return _with_track(
            state, op.track, replace(_track_at(state, op.track), sound=op.sound, segment=None)
        )
    if isinstance(op, SetSegment):
        track = _track_at(state, op.track)
        return _with_track(
            state, op.track, replace(track, segment=Segment(op.start_s, op.end_s))
        )
    if isinstance(op, SetBpm):
        return replace(state, bpm=op.bpm)
    raise InvalidOperation(f"not an op: {op!r}")


def _track_at(state: SequencerState, idx: int) -> Track:
    if not 0 <= idx < len(state.tracks):
        raise InvalidOperation(f"track {idx} out of range")
    return state.tracks[idx]


def _with_track(state: SequencerState, idx: int, track: Track) -> SequencerState:
    tracks = state.tracks[:idx] + (track,) + state.tracks[idx + 1 :]
    return replace(state, tracks=tracks)


# ---------------------------------------------------------------------------
# Snapshot encoding

# Key order is fixed so that equal states produce byte-identical text;
# snapshot hashes across server and clients rely on it.


def sound_to_obj(sound: SoundRef) -> dict:
    return {
        "freesound_id": sound.freesound_id,
        "name": sound.name,
        "duration_s": sound.duration_s,
        "preview_url": sound.preview_url,
        "username": sound.username,
        "license": sound.license,
    }


def track_to_obj(track: Track) -> dict:
    return {
        "cells": list(track.cells),
        "gain": track.gain,
        "sound": sound_to_obj(track.sound) if track.sound else None,
        "segment": (
            {"start_s": track.segment.start_s, "end_s": track.segment.end_s}
            if track.segment
            else None
        ),
    }


def state_to_obj(state: SequencerState) -> dict:
    return {
        "tracks": [track_to_obj(t) for t in state.tracks],
        "bpm": state.bpm,
        "steps": state.steps,
        "epoch": state.epoch,
    }


def snapshot_encode(state: SequencerState) -> str:
    return json.dumps(state_to_obj(state), separators=(",", ":"))


def _need(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise DecodeError("invariant_violation", f"{where} must be an object")
    if key not in obj:
        raise DecodeError("missing_field", f"{where}.{key}")
    return obj[key]


def sound_from_obj(obj: dict, where: str = "sound") -> SoundRef:
    sound = SoundRef(
        freesound_id=_need(obj, "freesound_id", where),
        name=_need(obj, "name", where),
        duration_s=_need(obj, "duration_s", where),
        preview_url=_need(obj, "preview_url", where),
        username=_need(obj, "username", where),
        license=_need(obj, "license", where),
    )
    problem = _sound_problem(sound)
    if problem:
        raise DecodeError("invariant_violation", problem)
    if not all(isinstance(s, str) for s in (sound.name, sound.preview_url, sound.username, sound.license)):
        raise DecodeError("invariant_violation", f"{where} text fields must be strings")
    return sound


def state_from_obj(obj: dict, *, max_tracks: int = DEFAULT_MAX_TRACKS) -> SequencerState:
    """Rebuild a state from its JSON object form, checking every invariant."""
    if not isinstance(obj, dict):
        raise DecodeError("invariant_violation", "snapshot must be a JSON object")
    raw_tracks = _need(obj, "tracks", "snapshot")
    bpm = _need(obj, "bpm", "snapshot")
    steps = _need(obj, "steps", "snapshot")
    epoch = _need(obj, "epoch", "snapshot")

    if not isinstance(raw_tracks, list):
        raise DecodeError("invariant_violation", "tracks must be an array")
    if len(raw_tracks) > max_tracks:
        raise DecodeError("invariant_violation", f"tracks.length > {max_tracks}")
    if not (_is_number(bpm) and BPM_MIN <= bpm <= BPM_MAX):
        raise DecodeError("invariant_violation", f"bpm {bpm} not in [{BPM_MIN}, {BPM_MAX}]")
    if steps not in ALLOWED_STEP_COUNTS or isinstance(steps, bool):
        raise DecodeError("invariant_violation", f"steps {steps} not one of {ALLOWED_STEP_COUNTS}")
    if not isinstance(epoch, int) or isinstance(epoch, bool) or epoch < 0:
        raise DecodeError("invariant_violation", "epoch must be a non-negative integer")

    tracks = []
    for i, raw in enumerate(raw_tracks):
        where = f"tracks[{i}]"
        cells = _need(raw, "cells", where)
        gain = _need(raw, "gain", where)
        raw_sound = _need(raw, "sound", where)
        raw_segment = _need(raw, "segment", where)

        if not isinstance(cells, list) or any(not isinstance(c, bool) for c in cells):
            raise DecodeError("invariant_violation", f"{where}.cells must be an array of booleans")
        if len(cells) != steps:
            raise DecodeError(
                "invariant_violation", f"{where}.cells has {len(cells)} cells, expected {steps}"
            )
        if not (_is_number(gain) and 0.0 <= gain <= 1.0):
            raise DecodeError("invariant_violation", f"{where}.gain {gain} not in [0, 1]")

        sound = sound_from_obj(raw_sound, f"{where}.sound") if raw_sound is not None else None
        segment = None
        if raw_segment is not None:
            start_s = _need(raw_segment, "start_s", f"{where}.segment")
            end_s = _need(raw_segment, "end_s", f"{where}.segment")
            if sound is None:
                raise DecodeError("invariant_violation", f"{where}.segment without a sound")
            if not (
                _is_number(start_s)
                and _is_number(end_s)
                and 0 <= start_s < end_s <= sound.duration_s
            ):
                raise DecodeError(
                    "invariant_violation",
                    f"{where}.segment [{start_s}, {end_s}] outside [0, {sound.duration_s}]",
                )
            segment = Segment(start_s, end_s)

        tracks.append(Track(cells=tuple(cells), gain=gain, sound=sound, segment=segment))

    return SequencerState(tracks=tuple(tracks), bpm=bpm, steps=steps, epoch=epoch)


def snapshot_decode(text: str, *, max_tracks: int = DEFAULT_MAX_TRACKS) -> SequencerState:
    try:
        obj = json.loads(text)
    except (json.JSONDecodeError, TypeError) as err:
        raise DecodeError("malformed_json", str(err)) from err
    return state_from_obj(obj, max_tracks=max_tracks)


# ---------------------------------------------------------------------------
# Timing


def step_interval_s(bpm: Number) -> float:
    """Seconds between step boundaries: sixteenth notes, 4 steps per beat."""
    return 60.0 / (bpm * STEPS_PER_BEAT)


def loop_duration_s(bpm: Number, steps: int) -> float:
    return steps * step_interval_s(bpm)
