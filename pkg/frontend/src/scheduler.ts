// Lookahead playback scheduler. A coarse JS timer (25 ms) scans ahead of
// the audio clock (100 ms window) and schedules every step boundary inside
// the window at sample-accurate times; the audio stack does the precise
// triggering. Step times come from the shared tempo math, and the loop
// wraps at steps * interval.

import { SequencerState, stepIntervalS } from "./protocol.js";

export const LOOKAHEAD_S = 0.1;
export const TICK_MS = 25;

export interface TriggerFn {
  (track: number, step: number, time: number): void;
}

export interface SchedulerDeps {
  now: () => number; // audio clock, seconds
  getState: () => SequencerState;
  audible: (track: number) => boolean;
  trigger: TriggerFn;
  onStep?: (step: number, time: number) => void;
  lookaheadS?: number;
}

export class LookaheadScheduler {
  private nextStepTime = 0;
  private step = 0;
  private timer: ReturnType<typeof setInterval> | null = null;
  private readonly lookaheadS: number;

  constructor(private deps: SchedulerDeps) {
    this.lookaheadS = deps.lookaheadS ?? LOOKAHEAD_S;
  }

  get running(): boolean {
    return this.timer !== null;
  }

  get currentStep(): number {
    return this.step;
  }

  start(): void {
    if (this.timer !== null) return;
    this.step = 0;
    this.nextStepTime = this.deps.now() + 0.05; // avoid a first-tick click
    this.timer = setInterval(() => this.pump(this.deps.now()), TICK_MS);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /**
   * Schedule every step boundary inside [now, now + lookahead). Exposed for
   * tests, which drive it with a fake clock instead of the interval timer.
   */
  pump(now: number): void {
    while (this.nextStepTime < now + this.lookaheadS) {
      const state = this.deps.getState();
      const time = this.nextStepTime;
      const step = this.step;
      this.deps.onStep?.(step, time);
      state.tracks.forEach((track, i) => {
        if (track.cells[step] && this.deps.audible(i)) {
          this.deps.trigger(i, step, time);
        }
      });
      // Tempo changes take effect from the next boundary onward.
      this.nextStepTime += stepIntervalS(state.bpm);
      this.step = (this.step + 1) % state.steps;
    }
  }
}
