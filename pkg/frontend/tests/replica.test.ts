import { describe, expect, it } from "vitest";

import { Message, applyOp, emptyState } from "../src/protocol.js";
import { Replica } from "../src/replica.js";

function snapshot(state = emptyState(), seq = 0, client = "c1"): Message {
  return { v: 1, type: "snapshot", room: "r", seq, client, state, users: ["me"] };
}

function opMsg(seq: number, epoch: number, client: string, payload: Message["payload"]): Message {
  return { v: 1, type: "op", room: "r", seq, epoch, client, payload };
}

describe("optimistic non-structural ops", () => {
  it("shows own toggle immediately and leaves state unchanged at echo", () => {
    const replica = new Replica();
    replica.handle(snapshot(applyOp(emptyState(), { kind: "add_track", sound: null }), 1));
    const out = replica.prepareOp({ kind: "set_step", track: 0, step: 3, active: true });
    expect(replica.visibleState().tracks[0].cells[3]).toBe(true);
    expect(replica.confirmed!.tracks[0].cells[3]).toBe(false);

    const before = JSON.stringify(replica.visibleState());
    replica.handle(opMsg(2, 1, "c1", out.payload));
    expect(JSON.stringify(replica.visibleState())).toBe(before);
    expect(replica.pending).toHaveLength(0);
    expect(replica.confirmed!.tracks[0].cells[3]).toBe(true);
  });

  it("converges to server order under a same-cell race", () => {
    const replica = new Replica();
    replica.handle(snapshot(applyOp(emptyState(), { kind: "add_track", sound: null }), 1));
    const own = replica.prepareOp({ kind: "set_step", track: 0, step: 0, active: true });
    // Foreign write lands first in the server order; our echo follows.
    replica.handle(opMsg(2, 1, "c2", { kind: "set_step", track: 0, step: 0, active: false, op_id: "c2-1" }));
    replica.handle(opMsg(3, 1, "c1", own.payload));
    expect(replica.visibleState().tracks[0].cells[0]).toBe(true);
  });
});

describe("structural echo discipline", () => {
  it("changes the track count only at echo", () => {
    const replica = new Replica();
    replica.handle(snapshot());
    const out = replica.prepareOp({ kind: "add_track", sound: null });
    expect(replica.visibleState().tracks).toHaveLength(0);
    expect(replica.hasPendingStructural()).toBe(true);
    replica.handle(opMsg(1, 1, "c1", out.payload));
    expect(replica.visibleState().tracks).toHaveLength(1);
    expect(replica.hasPendingStructural()).toBe(false);
  });
});

describe("recovery", () => {
  it("a sequence gap requests a resync and drops interim broadcasts", () => {
    const replica = new Replica();
    replica.handle(snapshot());
    const responses = replica.handle(opMsg(2, 1, "c2", { kind: "add_track", sound: null, op_id: "x" }));
    expect(responses.map((r) => r.type)).toEqual(["resync"]);
    expect(replica.seqGaps).toBe(1);
    expect(replica.handle(opMsg(3, 2, "c2", { kind: "add_track", sound: null, op_id: "y" }))).toEqual([]);

    let state = applyOp(emptyState(), { kind: "add_track", sound: null });
    state = applyOp(state, { kind: "add_track", sound: null });
    replica.handle(snapshot(state, 3));
    expect(replica.confirmed!.epoch).toBe(2);
    replica.handle(opMsg(4, 2, "c2", { kind: "set_step", track: 0, step: 0, active: true, op_id: "z" }));
    expect(replica.confirmed!.tracks[0].cells[0]).toBe(true);
  });

  it("a reject of an own op rolls back via resync", () => {
    const replica = new Replica();
    replica.handle(snapshot(applyOp(emptyState(), { kind: "add_track", sound: null }), 1));
    const out = replica.prepareOp({ kind: "set_step", track: 0, step: 0, active: true });
    expect(replica.visibleState().tracks[0].cells[0]).toBe(true);
    const responses = replica.handle({
      v: 1,
      type: "reject",
      room: "r",
      op_id: out.payload!.op_id,
      reason: "stale_epoch",
    });
    expect(responses.map((r) => r.type)).toEqual(["resync"]);
    replica.handle(snapshot(applyOp(emptyState(), { kind: "add_track", sound: null }), 1));
    expect(replica.visibleState().tracks[0].cells[0]).toBe(false);
  });

  it("an epoch mismatch after applying in order is surfaced", () => {
    const replica = new Replica();
    replica.handle(snapshot());
    expect(() =>
      replica.handle(opMsg(1, 5, "c2", { kind: "add_track", sound: null, op_id: "x" })),
    ).toThrow(/epoch mismatch/);
  });
});

describe("presence and chat", () => {
  it("tracks users and chat in broadcast order", () => {
    const replica = new Replica();
    replica.handle(snapshot());
    replica.handle({ v: 1, type: "presence", room: "r", seq: 1, event: "joined", name: "bo", count: 2 });
    expect(replica.users).toEqual(["me", "bo"]);
    replica.handle({ v: 1, type: "chat", room: "r", seq: 2, from: "bo", text: "hi" });
    replica.handle({ v: 1, type: "presence", room: "r", seq: 3, event: "left", name: "bo", count: 1 });
    expect(replica.users).toEqual(["me"]);
    expect(replica.chatLog.map((c) => c.text)).toEqual(["hi"]);
    expect(replica.lastSeq).toBe(3);
    expect(replica.seqGaps).toBe(0);
  });
});
