// Client-side replica of the room document, driven by the server's
// broadcast stream.
//
// `confirmed` is exactly the fold of the server's op log. The visible state
// adds our own non-structural ops that are still awaiting their echo, so the
// author sees toggles immediately. Structural ops (add/remove track) are
// never previewed: a row appears or disappears only when the server's
// broadcast comes back, author included. An echo moves its op from the
// pending preview into the confirmed log, leaving the visible state
// unchanged; a reject or a sequence gap rolls back via a snapshot resync.

import {
  ChatEntry,
  Message,
  Op,
  OpPayload,
  SequencerState,
  applicable,
  applyOp,
  structural,
} from "./protocol.js";

interface PendingOp {
  opId: string;
  op: Op;
  structural: boolean;
}

export class Replica {
  room: string | null = null;
  clientId: string | null = null;
  confirmed: SequencerState | null = null;
  lastSeq = 0;
  pending: PendingOp[] = [];
  needsResync = true;
  users: string[] = [];
  chatLog: ChatEntry[] = [];
  seqGaps = 0;
  resyncs = 0;
  rejects = new Map<string, number>();
  private opCounter = 0;

  hello(room: string, desiredName: string): Message {
    this.room = room;
    return { v: 1, type: "hello", room, desired_name: desiredName };
  }

  hasPendingStructural(): boolean {
    return this.pending.some((p) => p.structural);
  }

  prepareOp(op: Op): Message {
    if (this.confirmed === null) throw new Error("no snapshot yet");
    this.opCounter += 1;
    const opId = `${this.clientId ?? "pre"}-${this.opCounter}`;
    this.pending.push({ opId, op, structural: structural(op) });
    const payload: OpPayload = { ...op, op_id: opId };
    return { v: 1, type: "op", room: this.room ?? undefined, epoch: this.confirmed.epoch, payload };
  }

  chatMessage(text: string): Message {
    return { v: 1, type: "chat", room: this.room ?? undefined, text };
  }

  requestResync(): Message {
    this.needsResync = true;
    this.resyncs += 1;
    return { v: 1, type: "resync", room: this.room ?? undefined };
  }

  /** Confirmed log plus still-applicable pending non-structural previews. */
  visibleState(): SequencerState {
    if (this.confirmed === null) throw new Error("no snapshot yet");
    let state = this.confirmed;
    for (const entry of this.pending) {
      if (!entry.structural && applicable(state, entry.op)) {
        state = applyOp(state, entry.op);
      }
    }
    return state;
  }

  /** Process one server frame; returns frames to send back (at most a resync). */
  handle(msg: Message): Message[] {
    switch (msg.type) {
      case "snapshot":
        return this.onSnapshot(msg);
      case "op":
      case "chat":
      case "presence":
        return this.onBroadcast(msg);
      case "reject":
        return this.onReject(msg);
      default:
        return [];
    }
  }

  private onSnapshot(msg: Message): Message[] {
    this.confirmed = msg.state ?? null;
    this.lastSeq = msg.seq ?? 0;
    this.pending = [];
    this.needsResync = false;
    if (msg.client) this.clientId = msg.client;
    if (msg.users) this.users = [...msg.users];
    if (msg.chat) this.chatLog = [...msg.chat];
    return [];
  }

  private onBroadcast(msg: Message): Message[] {
    if (this.needsResync) return []; // superseded by the awaited snapshot
    if (msg.seq === undefined) throw new Error(`broadcast ${msg.type} without seq`);
    if (msg.seq !== this.lastSeq + 1) {
      this.seqGaps += 1;
      return [this.requestResync()];
    }
    this.lastSeq = msg.seq;

    if (msg.type === "op") return this.applyBroadcastOp(msg);
    if (msg.type === "chat") {
      this.chatLog.push({ seq: msg.seq, from: msg.from ?? "", text: msg.text ?? "" });
    } else if (msg.type === "presence") {
      if (msg.event === "joined" && msg.name && !this.users.includes(msg.name)) {
        this.users.push(msg.name);
      } else if (msg.event === "left" && msg.name) {
        this.users = this.users.filter((u) => u !== msg.name);
      }
    }
    return [];
  }

  private applyBroadcastOp(msg: Message): Message[] {
    if (this.confirmed === null || !msg.payload) return [];
    const { op_id, ...op } = msg.payload;
    if (msg.client === this.clientId) {
      this.pending = this.pending.filter((p) => p.opId !== op_id);
    }
    if (!applicable(this.confirmed, op as Op)) {
      // The server's ordered log must always apply cleanly; give up and resync.
      return [this.requestResync()];
    }
    this.confirmed = applyOp(this.confirmed, op as Op);
    if (msg.epoch !== undefined && this.confirmed.epoch !== msg.epoch) {
      throw new Error(
        `epoch mismatch after seq ${msg.seq}: local ${this.confirmed.epoch} != ${msg.epoch}`,
      );
    }
    return [];
  }

  private onReject(msg: Message): Message[] {
    const reason = msg.reason ?? "unknown";
    this.rejects.set(reason, (this.rejects.get(reason) ?? 0) + 1);
    const match = this.pending.find((p) => p.opId === msg.op_id);
    if (match) {
      this.pending = this.pending.filter((p) => p !== match);
      return [this.requestResync()];
    }
    return [];
  }
}
