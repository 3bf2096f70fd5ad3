// Sequencer grid: one row per track with step cells, gain knob, solo/mute/
// delete controls; collapsed rows show the sample waveform with draggable
// segment handles; an add-track row doubles as a drop target.

import { AudioEngine } from "../audio.js";
import { SoundRef, Track } from "../protocol.js";
import { Session } from "../session.js";

const WAVEFORM_PX_PER_BIN = 2;

export class GridView {
  readonly el = document.createElement("div");

  constructor(
    private session: Session,
    private engine: AudioEngine,
  ) {
    this.el.className = "grid";
    session.on("change", () => this.render());
    this.render();
  }

  render(): void {
    const state = this.session.state;
    this.el.replaceChildren();
    if (!state) {
      this.el.textContent = "connecting…";
      return;
    }
    state.tracks.forEach((track, i) => {
      this.el.appendChild(this.renderTrackRow(track, i, state.steps));
      if (track.sound) void this.engine.ensureLoaded(track.sound);
    });
    this.el.appendChild(this.renderAddRow());
  }

  private renderTrackRow(track: Track, index: number, steps: number): HTMLElement {
    const view = this.session.view;
    const row = document.createElement("div");
    row.className = "track-row";
    if (!view.audible(index)) row.classList.add("inaudible");

    const collapse = button(view.collapsed[index] ? "▸" : "▾", "collapse", () =>
      this.session.toggleCollapsed(index),
    );
    collapse.title = "collapse track";
    row.appendChild(collapse);

    const label = document.createElement("span");
    label.className = "track-name";
    label.textContent = track.sound ? track.sound.name : "(empty track)";
    if (this.engine.isUnplayable(track.sound)) {
      label.textContent += " ⚠";
      label.title = "preview could not be decoded; track is silent for you";
    }
    row.appendChild(label);

    const middle = document.createElement("div");
    middle.className = "track-middle";
    if (view.collapsed[index]) {
      middle.appendChild(this.renderWaveform(track, index));
    } else {
      middle.appendChild(this.renderCells(track, index, steps));
    }
    row.appendChild(middle);

    // Per-row controls at the right of the pads.
    const controls = document.createElement("div");
    controls.className = "track-controls";
    const gain = document.createElement("input");
    gain.type = "range";
    gain.min = "0";
    gain.max = "1";
    gain.step = "0.01";
    gain.value = String(track.gain);
    gain.title = `gain ${track.gain.toFixed(2)}`;
    gain.addEventListener("change", () => this.session.setGain(index, Number(gain.value)));
    controls.appendChild(gain);
    controls.appendChild(
      toggleButton("S", "solo", !!view.solo[index], () => this.session.toggleSolo(index)),
    );
    controls.appendChild(
      toggleButton("M", "mute", !!view.mute[index], () => this.session.toggleMute(index)),
    );
    controls.appendChild(button("✕", "delete", () => this.session.removeTrack(index)));
    row.appendChild(controls);

    this.makeDropTarget(row, (sound) => this.session.loadSample(index, sound));
    return row;
  }

  private renderCells(track: Track, index: number, steps: number): HTMLElement {
    const cells = document.createElement("div");
    cells.className = "cells";
    for (let step = 0; step < steps; step++) {
      const cell = document.createElement("button");
      cell.className = "cell";
      if (track.cells[step]) cell.classList.add("active");
      if (step === this.session.view.playheadStep && this.session.view.playing) {
        cell.classList.add("playhead");
      }
      if (step % 4 === 0) cell.classList.add("beat");
      cell.addEventListener("click", () => this.session.toggleStep(index, step));
      cells.appendChild(cell);
    }
    return cells;
  }

  private renderWaveform(track: Track, index: number): HTMLElement {
    const wrap = document.createElement("div");
    wrap.className = "waveform";
    const canvas = document.createElement("canvas");
    canvas.width = 480;
    canvas.height = 56;
    wrap.appendChild(canvas);
    const sound = track.sound;
    if (!sound) return wrap;

    const draw = () => drawWaveform(canvas, this.engine.buffer(sound.freesound_id), track, sound);
    draw();
    void this.engine.ensureLoaded(sound).then(draw);

    // Drag across the waveform selects the triggered segment on release.
    let dragStart: number | null = null;
    const toSeconds = (ev: MouseEvent) => {
      const rect = canvas.getBoundingClientRect();
      const frac = Math.min(1, Math.max(0, (ev.clientX - rect.left) / rect.width));
      return frac * sound.duration_s;
    };
    canvas.addEventListener("mousedown", (ev) => {
      dragStart = toSeconds(ev);
    });
    canvas.addEventListener("mouseup", (ev) => {
      if (dragStart === null) return;
      const a = dragStart;
      const b = toSeconds(ev);
      dragStart = null;
      const [lo, hi] = a < b ? [a, b] : [b, a];
      if (hi - lo > 0.01) this.session.setSegment(index, round3(lo), round3(hi));
    });
    return wrap;
  }

  private renderAddRow(): HTMLElement {
    const row = document.createElement("div");
    row.className = "track-row add-row";
    const add = button("+ add track", "add-track", () => this.session.addTrack());
    row.appendChild(add);
    const hint = document.createElement("span");
    hint.className = "hint";
    hint.textContent = "drop a search result here to add it as a new track";
    row.appendChild(hint);
    this.makeDropTarget(row, (sound) => this.session.addTrack(sound));
    return row;
  }

  private makeDropTarget(el: HTMLElement, onDrop: (sound: SoundRef) => void): void {
    el.addEventListener("dragover", (ev) => {
      ev.preventDefault();
      el.classList.add("drop-ready");
    });
    el.addEventListener("dragleave", () => el.classList.remove("drop-ready"));
    el.addEventListener("drop", (ev) => {
      ev.preventDefault();
      el.classList.remove("drop-ready");
      const raw = ev.dataTransfer?.getData("application/x-seqroom-sound");
      if (!raw) return;
      try {
        onDrop(JSON.parse(raw) as SoundRef);
      } catch {
        // not ours; ignore
      }
    });
  }
}

function drawWaveform(
  canvas: HTMLCanvasElement,
  buffer: AudioBuffer | undefined,
  track: Track,
  sound: SoundRef,
): void {
  const ctx2d = canvas.getContext("2d");
  if (!ctx2d) return;
  ctx2d.clearRect(0, 0, canvas.width, canvas.height);
  ctx2d.fillStyle = "#223";
  ctx2d.fillRect(0, 0, canvas.width, canvas.height);

  if (buffer) {
    const data = buffer.getChannelData(0);
    const bins = Math.floor(canvas.width / WAVEFORM_PX_PER_BIN);
    const samplesPerBin = Math.max(1, Math.floor(data.length / bins));
    ctx2d.fillStyle = "#7fd";
    for (let b = 0; b < bins; b++) {
      let peak = 0;
      const start = b * samplesPerBin;
      for (let s = start; s < start + samplesPerBin && s < data.length; s += 16) {
        const v = Math.abs(data[s]);
        if (v > peak) peak = v;
      }
      const h = Math.max(1, peak * canvas.height);
      ctx2d.fillRect(b * WAVEFORM_PX_PER_BIN, (canvas.height - h) / 2, WAVEFORM_PX_PER_BIN - 1, h);
    }
  } else {
    ctx2d.fillStyle = "#556";
    ctx2d.fillText("loading…", 8, canvas.height / 2);
  }

  // Shaded region marks the sequenced segment.
  if (track.segment) {
    const x0 = (track.segment.start_s / sound.duration_s) * canvas.width;
    const x1 = (track.segment.end_s / sound.duration_s) * canvas.width;
    ctx2d.fillStyle = "rgba(255, 220, 120, 0.3)";
    ctx2d.fillRect(x0, 0, x1 - x0, canvas.height);
    ctx2d.strokeStyle = "#fd8";
    ctx2d.strokeRect(x0, 0, x1 - x0, canvas.height);
  }
}

function round3(x: number): number {
  return Math.round(x * 1000) / 1000;
}

function button(text: string, cls: string, onClick: () => void): HTMLButtonElement {
  const el = document.createElement("button");
  el.className = cls;
  el.textContent = text;
  el.addEventListener("click", onClick);
  return el;
}

function toggleButton(text: string, cls: string, on: boolean, onClick: () => void): HTMLButtonElement {
  const el = button(text, cls, onClick);
  if (on) el.classList.add("on");
  return el;
}
