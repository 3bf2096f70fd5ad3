"""Seeded random generators for valid states and ops, shared across tests.

Plain random.Random generators (not hypothesis strategies) so the same
code can drive exact-count loops (e.g. 1,000 round trips) and, via a
seed integer, hypothesis-driven property tests.
"""

from __future__ import annotations

import random

from seqroom import core

NAMES = [
    "kick punchy",
    "snare tight",
    "open hat",
    "guitar pluck",
    "bass wobble",
    "vocal chop",
    "rain field recording",
    "clap layered",
]
USERS = ["ana", "bo", "cai", "dee", "eli"]
LICENSES = [
    "http://creativecommons.org/publicdomain/zero/1.0/",
    "https://creativecommons.org/licenses/by/4.0/",
    "http://creativecommons.org/licenses/by/3.0/",
]


def random_sound(rng: random.Random) -> core.SoundRef:
    sound_id = rng.randint(1, 600000)
    return core.SoundRef(
        freesound_id=sound_id,
        name=rng.choice(NAMES),
        duration_s=rng.randint(200, 30000) / 1000,
        preview_url=f"https://cdn.freesound.org/previews/{sound_id // 1000}/{sound_id}-hq.mp3",
        username=rng.choice(USERS),
        license=rng.choice(LICENSES),
    )


def random_track(rng: random.Random, steps: int) -> core.Track:
    sound = random_sound(rng) if rng.random() < 0.6 else None
    segment = None
    if sound is not None and rng.random() < 0.5:
        dur_ms = int(sound.duration_s * 1000)
        start_ms = rng.randrange(0, dur_ms)
        end_ms = rng.randrange(start_ms + 1, dur_ms + 1)
        segment = core.Segment(start_ms / 1000, end_ms / 1000)
    return core.Track(
        cells=tuple(rng.random() < 0.3 for _ in range(steps)),
        gain=rng.randint(0, 1000) / 1000,
        sound=sound,
        segment=segment,
    )


def random_state(rng: random.Random, *, max_tracks: int = core.DEFAULT_MAX_TRACKS) -> core.SequencerState:
    steps = rng.choice(core.ALLOWED_STEP_COUNTS)
    return core.SequencerState(
        tracks=tuple(random_track(rng, steps) for _ in range(rng.randint(0, max_tracks))),
        bpm=rng.choice([rng.randint(core.BPM_MIN, core.BPM_MAX), rng.randint(400, 2400) / 10]),
        steps=steps,
        epoch=rng.randint(0, 500),
    )


def _random_segment_op(rng: random.Random, state: core.SequencerState, track_idx: int) -> core.SetSegment:
    duration_ms = int(state.tracks[track_idx].sound.duration_s * 1000)
    start_ms = rng.randrange(0, duration_ms)
    end_ms = rng.randrange(start_ms + 1, duration_ms + 1)
    return core.SetSegment(track=track_idx, start_s=start_ms / 1000, end_s=end_ms / 1000)


def random_nonstructural_op(rng: random.Random, state: core.SequencerState) -> core.Op:
    """A non-structural op valid against the given state."""
    kinds = ["set_bpm"]
    if state.tracks:
        kinds += ["set_step", "set_step", "set_gain", "load_sample"]
    with_sound = [i for i, t in enumerate(state.tracks) if t.sound is not None]
    if with_sound:
        kinds.append("set_segment")
    kind = rng.choice(kinds)
    if kind == "set_step":
        return core.SetStep(
            track=rng.randrange(len(state.tracks)),
            step=rng.randrange(state.steps),
            active=rng.random() < 0.5,
        )
    if kind == "set_gain":
        return core.SetGain(track=rng.randrange(len(state.tracks)), gain=rng.randint(0, 1000) / 1000)
    if kind == "load_sample":
        return core.LoadSample(track=rng.randrange(len(state.tracks)), sound=random_sound(rng))
    if kind == "set_segment":
        return _random_segment_op(rng, state, rng.choice(with_sound))
    return core.SetBpm(bpm=rng.randint(core.BPM_MIN, core.BPM_MAX))


def random_valid_op(
    rng: random.Random, state: core.SequencerState, *, max_tracks: int = core.DEFAULT_MAX_TRACKS
) -> core.Op:
    """Any op (structural included) valid against the given state."""
    if rng.random() < 0.35:
        can_add = len(state.tracks) < max_tracks
        can_remove = bool(state.tracks)
        if can_add and (not can_remove or rng.random() < 0.5):
            sound = random_sound(rng) if rng.random() < 0.6 else None
            return core.AddTrack(sound=sound)
        if can_remove:
            return core.RemoveTrack(track=rng.randrange(len(state.tracks)))
    return random_nonstructural_op(rng, state)
