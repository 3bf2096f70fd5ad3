// Session store: one room connection's replica, local view state, and the
// outgoing intent API the UI calls. Everything the widgets render comes
// from here; everything they do funnels through here.

import {
  Message,
  Op,
  SequencerState,
  SoundRef,
  decodeMessage,
  encodeMessage,
} from "./protocol.js";
import { Replica } from "./replica.js";
import { LocalViewState } from "./view.js";

export interface SocketLike {
  send(text: string): void;
}

export type SessionEvent = "change" | "chat" | "presence" | "notice" | "fault";
type Listener = () => void;

export class Session {
  readonly replica = new Replica();
  readonly view = new LocalViewState();
  notices: string[] = [];
  private listeners = new Map<SessionEvent, Set<Listener>>();

  constructor(
    private socket: SocketLike,
    readonly room: string,
    readonly name: string,
  ) {}

  // -- wiring --------------------------------------------------------------

  on(event: SessionEvent, fn: Listener): () => void {
    if (!this.listeners.has(event)) this.listeners.set(event, new Set());
    this.listeners.get(event)!.add(fn);
    return () => this.listeners.get(event)!.delete(fn);
  }

  private emit(event: SessionEvent): void {
    this.listeners.get(event)?.forEach((fn) => fn());
  }

  private send(msg: Message): void {
    this.socket.send(encodeMessage(msg));
  }

  sendHello(): void {
    this.send(this.replica.hello(this.room, this.name));
  }

  /** Feed one raw frame from the socket. */
  onFrame(text: string): void {
    let msg: Message;
    try {
      msg = decodeMessage(text);
    } catch {
      return;
    }

    // Per-track view flags follow the shared array's splice semantics, so
    // structural broadcasts that are about to apply shift them in lockstep.
    const willApply =
      msg.type === "op" &&
      !this.replica.needsResync &&
      this.replica.confirmed !== null &&
      msg.seq === this.replica.lastSeq + 1 &&
      !!msg.payload;
    if (willApply && msg.payload!.kind === "remove_track") {
      this.view.spliceTrack(msg.payload!.track);
    } else if (willApply && msg.payload!.kind === "add_track") {
      this.view.trackAdded();
    }

    let responses: Message[];
    try {
      responses = this.replica.handle(msg);
    } catch (err) {
      // Ordered-stream contradiction: surface it, then recover by resync.
      this.notices.push(`protocol fault: ${err}`);
      this.emit("fault");
      responses = [this.replica.requestResync()];
    }
    for (const response of responses) this.send(response);

    if (msg.type === "snapshot" && this.replica.confirmed) {
      this.view.resize(this.replica.confirmed.tracks.length);
    }
    if (msg.type === "reject" && this.replica.needsResync) {
      this.notices.push(`change rejected (${msg.reason}); resyncing`);
      this.emit("notice");
    }
    if (msg.type === "chat") this.emit("chat");
    if (msg.type === "presence") this.emit("presence");
    this.emit("change");
  }

  // -- shared-state intents --------------------------------------------------

  get state(): SequencerState | null {
    return this.replica.confirmed === null ? null : this.replica.visibleState();
  }

  private sendOp(op: Op): void {
    if (this.replica.confirmed === null) return;
    if (this.replica.hasPendingStructural()) {
      // Our own add/remove is still in flight; its echo will shift indices.
      this.notices.push("waiting for the server to confirm the last track change");
      this.emit("notice");
      return;
    }
    this.send(this.replica.prepareOp(op));
    this.emit("change");
  }

  toggleStep(track: number, step: number): void {
    const state = this.state;
    if (!state || !state.tracks[track]) return;
    const target = !state.tracks[track].cells[step];
    this.sendOp({ kind: "set_step", track, step, active: target });
  }

  setGain(track: number, gain: number): void {
    this.sendOp({ kind: "set_gain", track, gain: Math.min(1, Math.max(0, gain)) });
  }

  addTrack(sound: SoundRef | null = null): void {
    this.sendOp({ kind: "add_track", sound });
  }

  removeTrack(track: number): void {
    this.sendOp({ kind: "remove_track", track });
  }

  loadSample(track: number, sound: SoundRef): void {
    this.sendOp({ kind: "load_sample", track, sound });
  }

  setSegment(track: number, startS: number, endS: number): void {
    this.sendOp({ kind: "set_segment", track, start_s: startS, end_s: endS });
  }

  setBpm(bpm: number): void {
    this.sendOp({ kind: "set_bpm", bpm: Math.min(240, Math.max(40, Math.round(bpm))) });
  }

  sendChat(text: string): void {
    if (!text) return;
    this.send(this.replica.chatMessage(text));
  }

  // -- local-only view intents (never touch the socket) ----------------------

  toggleSolo(track: number): void {
    this.view.solo[track] = !this.view.solo[track];
    this.emit("change");
  }

  toggleMute(track: number): void {
    this.view.mute[track] = !this.view.mute[track];
    this.emit("change");
  }

  toggleCollapsed(track: number): void {
    this.view.collapsed[track] = !this.view.collapsed[track];
    this.emit("change");
  }

  setPlaying(playing: boolean): void {
    this.view.playing = playing;
    this.emit("change");
  }

  setPlayhead(step: number): void {
    this.view.playheadStep = step;
    this.emit("change");
  }
}
