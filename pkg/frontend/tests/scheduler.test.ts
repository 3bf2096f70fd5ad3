import { describe, expect, it } from "vitest";

import { SequencerState, applyOp, emptyState } from "../src/protocol.js";
import { LookaheadScheduler } from "../src/scheduler.js";
import { LocalViewState } from "../src/view.js";

function oneCellState(bpm = 120): SequencerState {
  let state = emptyState(bpm);
  state = applyOp(state, { kind: "add_track", sound: null });
  return applyOp(state, { kind: "set_step", track: 0, step: 0, active: true });
}

function runScheduler(
  state: SequencerState,
  view: LocalViewState,
  untilS: number,
): { track: number; step: number; time: number }[] {
  view.resize(state.tracks.length);
  const triggers: { track: number; step: number; time: number }[] = [];
  let clock = 0;
  const scheduler = new LookaheadScheduler({
    now: () => clock,
    getState: () => state,
    audible: (track) => view.audible(track),
    trigger: (track, step, time) => triggers.push({ track, step, time }),
  });
  // Drive the 25 ms pump by hand on a fake audio clock.
  scheduler.pump(clock);
  while (clock < untilS) {
    clock += 0.025;
    scheduler.pump(clock);
  }
  return triggers;
}

describe("lookahead scheduler", () => {
  it("spaces one active cell at 120 bpm exactly one loop (2.0 s) apart", () => {
    const triggers = runScheduler(oneCellState(120), new LocalViewState(), 9);
    expect(triggers.length).toBeGreaterThanOrEqual(4);
    for (let i = 1; i < triggers.length; i++) {
      const delta = triggers[i].time - triggers[i - 1].time;
      expect(Math.abs(delta - 2.0)).toBeLessThanOrEqual(0.005);
    }
  });

  it("schedules on sixteenth-note boundaries", () => {
    let state = oneCellState(120);
    state = applyOp(state, { kind: "set_step", track: 0, step: 4, active: true });
    const triggers = runScheduler(state, new LocalViewState(), 3);
    const steps = triggers.map((t) => t.step);
    expect(steps.slice(0, 4)).toEqual([0, 4, 0, 4]);
    // Step 4 fires half a beat later: 4 * 0.125 s.
    expect(triggers[1].time - triggers[0].time).toBeCloseTo(0.5, 10);
  });

  it("schedules nothing for a muted track", () => {
    const view = new LocalViewState();
    view.resize(1);
    view.mute[0] = true;
    expect(runScheduler(oneCellState(), view, 5)).toHaveLength(0);
  });

  it("soloing another track silences this one", () => {
    let state = oneCellState();
    state = applyOp(state, { kind: "add_track", sound: null });
    const view = new LocalViewState();
    view.resize(2);
    view.solo[1] = true;
    const triggers = runScheduler(state, view, 5);
    expect(triggers).toHaveLength(0); // only track 0 has an active cell
  });

  it("keeps scheduling while the window spans multiple steps", () => {
    let state = emptyState(240); // 0.0625 s per step, lookahead covers >1 step
    state = applyOp(state, { kind: "add_track", sound: null });
    for (let s = 0; s < 16; s++) {
      state = applyOp(state, { kind: "set_step", track: 0, step: s, active: true });
    }
    const triggers = runScheduler(state, new LocalViewState(), 1);
    for (let i = 1; i < triggers.length; i++) {
      expect(triggers[i].time - triggers[i - 1].time).toBeCloseTo(0.0625, 10);
    }
  });
});

describe("local view audibility", () => {
  it("matches the audible() contract", () => {
    const view = new LocalViewState();
    view.resize(3);
    expect(view.audible(0)).toBe(true);
    view.mute[0] = true;
    expect(view.audible(0)).toBe(false);
    view.solo[1] = true;
    expect(view.audible(1)).toBe(true);
    expect(view.audible(2)).toBe(false); // not soloed while another is
  });

  it("splices per-track flags with the track array", () => {
    const view = new LocalViewState();
    view.resize(3);
    view.mute[1] = true;
    view.spliceTrack(0);
    expect(view.mute).toEqual([true, false]);
    view.trackAdded();
    expect(view.mute).toEqual([true, false, false]);
  });
});
