"""seqroom: room-based collaborative step sequencing.

An authoritative WebSocket synchronization server around a deterministic
sequencer state machine, plus the wire protocol, a Freesound search
client, and a multi-client convergence-testing harness.
"""

from .core import (
    AddTrack,
    DecodeError,
    LoadSample,
    Op,
    RemoveTrack,
    Segment,
    SequencerState,
    SetBpm,
    SetGain,
    SetSegment,
    SetStep,
    SoundRef,
    Track,
    apply,
    snapshot_decode,
    snapshot_encode,
    step_interval_s,
    structural,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "AddTrack",
    "DecodeError",
    "LoadSample",
    "Op",
    "RemoveTrack",
    "Segment",
    "SequencerState",
    "SetBpm",
    "SetGain",
    "SetSegment",
    "SetStep",
    "SoundRef",
    "Track",
    "apply",
    "snapshot_decode",
    "snapshot_encode",
    "step_interval_s",
    "structural",
    "validate",
    "__version__",
]
