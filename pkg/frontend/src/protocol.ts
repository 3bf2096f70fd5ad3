// Wire format: one JSON message per WebSocket text frame, shared with the
// server. Ops travel inside `payload` with a client-assigned op_id so we can
// recognize our own echoes in the broadcast stream.

export interface SoundRef {
  freesound_id: number;
  name: string;
  duration_s: number;
  preview_url: string;
  username: string;
  license: string;
}

export interface Segment {
  start_s: number;
  end_s: number;
}

export interface Track {
  cells: boolean[];
  gain: number;
  sound: SoundRef | null;
  segment: Segment | null;
}

export interface SequencerState {
  tracks: Track[];
  bpm: number;
  steps: number;
  epoch: number;
}

export type Op =
  | { kind: "set_step"; track: number; step: number; active: boolean }
  | { kind: "set_gain"; track: number; gain: number }
  | { kind: "add_track"; sound: SoundRef | null }
  | { kind: "remove_track"; track: number }
  | { kind: "load_sample"; track: number; sound: SoundRef }
  | { kind: "set_segment"; track: number; start_s: number; end_s: number }
  | { kind: "set_bpm"; bpm: number };

export type OpPayload = Op & { op_id: string };

export interface ChatEntry {
  seq: number;
  from: string;
  text: string;
}

export type MessageKind =
  | "hello"
  | "snapshot"
  | "op"
  | "reject"
  | "chat"
  | "presence"
  | "ping"
  | "pong"
  | "resync"
  | "error";

export interface Message {
  v: number;
  type: MessageKind;
  room?: string;
  seq?: number;
  epoch?: number;
  client?: string;
  desired_name?: string;
  state?: SequencerState;
  users?: string[];
  chat?: ChatEntry[];
  payload?: OpPayload;
  op_id?: string | null;
  reason?: string;
  detail?: string;
  from?: string;
  text?: string;
  event?: "joined" | "left";
  name?: string;
  count?: number;
}

export const PROTOCOL_VERSION = 1;

export function encodeMessage(msg: Message): string {
  return JSON.stringify(msg);
}

export function decodeMessage(text: string): Message {
  const obj = JSON.parse(text);
  if (typeof obj !== "object" || obj === null || typeof obj.type !== "string") {
    throw new Error("malformed frame");
  }
  return obj as Message;
}

export function structural(op: Op): boolean {
  return op.kind === "add_track" || op.kind === "remove_track";
}

export function emptyState(bpm = 120, steps = 16): SequencerState {
  return { tracks: [], bpm, steps, epoch: 0 };
}

// Seconds between step boundaries: 4 steps per beat (sixteenth notes).
export function stepIntervalS(bpm: number): number {
  return 60 / (bpm * 4);
}

export function loopDurationS(bpm: number, steps: number): number {
  return steps * stepIntervalS(bpm);
}

function cloneTrack(track: Track): Track {
  return { ...track, cells: [...track.cells] };
}

/** Pure application of a wire op; returns a new state, never mutates. */
export function applyOp(state: SequencerState, op: Op): SequencerState {
  switch (op.kind) {
    case "set_step": {
      const tracks = state.tracks.map((t, i) => {
        if (i !== op.track) return t;
        const next = cloneTrack(t);
        next.cells[op.step] = op.active;
        return next;
      });
      return { ...state, tracks };
    }
    case "set_gain":
      return {
        ...state,
        tracks: state.tracks.map((t, i) => (i === op.track ? { ...t, gain: op.gain } : t)),
      };
    case "add_track": {
      const track: Track = {
        cells: new Array(state.steps).fill(false),
        gain: 0.8,
        sound: op.sound ?? null,
        segment: null,
      };
      return { ...state, tracks: [...state.tracks, track], epoch: state.epoch + 1 };
    }
    case "remove_track":
      return {
        ...state,
        tracks: state.tracks.filter((_, i) => i !== op.track),
        epoch: state.epoch + 1,
      };
    case "load_sample":
      // A segment is meaningless against a different sound's duration.
      return {
        ...state,
        tracks: state.tracks.map((t, i) =>
          i === op.track ? { ...t, sound: op.sound, segment: null } : t,
        ),
      };
    case "set_segment":
      return {
        ...state,
        tracks: state.tracks.map((t, i) =>
          i === op.track ? { ...t, segment: { start_s: op.start_s, end_s: op.end_s } } : t,
        ),
      };
    case "set_bpm":
      return { ...state, bpm: op.bpm };
  }
}

/** Cheap applicability check used before previewing pending ops. */
export function applicable(state: SequencerState, op: Op): boolean {
  switch (op.kind) {
    case "set_step":
      return op.track >= 0 && op.track < state.tracks.length && op.step >= 0 && op.step < state.steps;
    case "set_gain":
      return op.track >= 0 && op.track < state.tracks.length && op.gain >= 0 && op.gain <= 1;
    case "add_track":
      return true;
    case "remove_track":
    case "load_sample":
      return op.track >= 0 && op.track < state.tracks.length;
    case "set_segment": {
      const track = state.tracks[op.track];
      return (
        track !== undefined &&
        track.sound !== null &&
        op.start_s >= 0 &&
        op.start_s < op.end_s &&
        op.end_s <= track.sound.duration_s
      );
    }
    case "set_bpm":
      return op.bpm >= 40 && op.bpm <= 240;
  }
}
