// Freesound search panel: text query with duration filters, draggable
// results, per-result preview playback.

import { searchSounds } from "../api.js";
import { AudioEngine } from "../audio.js";
import { SoundRef } from "../protocol.js";

export class SearchPanel {
  readonly el = document.createElement("div");
  private results = document.createElement("div");
  private status = document.createElement("div");
  private page = 1;
  private lastQuery = "";

  constructor(private engine: AudioEngine) {
    this.el.className = "search-panel";
    const form = document.createElement("form");
    form.className = "search-form";

    const query = input("search Freesound…", "search");
    const minDur = input("min s", "number");
    const maxDur = input("max s", "number");
    minDur.step = maxDur.step = "0.1";
    const go = document.createElement("button");
    go.textContent = "search";
    form.append(query, minDur, maxDur, go);

    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      this.page = 1;
      void this.run(query.value, numberOrUndefined(minDur.value), numberOrUndefined(maxDur.value));
    });

    const pager = document.createElement("div");
    pager.className = "pager";
    const prev = document.createElement("button");
    prev.textContent = "‹ prev";
    const next = document.createElement("button");
    next.textContent = "next ›";
    prev.addEventListener("click", () => {
      if (this.page > 1) {
        this.page -= 1;
        void this.run(query.value, numberOrUndefined(minDur.value), numberOrUndefined(maxDur.value));
      }
    });
    next.addEventListener("click", () => {
      this.page += 1;
      void this.run(query.value, numberOrUndefined(minDur.value), numberOrUndefined(maxDur.value));
    });
    pager.append(prev, next);

    this.status.className = "search-status";
    this.results.className = "search-results";
    this.el.append(form, this.status, this.results, pager);
  }

  private async run(query: string, minDur?: number, maxDur?: number): Promise<void> {
    if (!query.trim()) return;
    this.lastQuery = query;
    this.status.textContent = "searching…";
    try {
      const outcome = await searchSounds(query, minDur, maxDur, this.page);
      if (query !== this.lastQuery) return; // stale response
      if (!outcome.ok) {
        this.status.textContent = `search unavailable: ${outcome.error}`;
        return;
      }
      this.status.textContent = `${outcome.total} sounds — page ${this.page}`;
      this.renderResults(outcome.results);
    } catch (err) {
      this.status.textContent = `search failed: ${err}`;
    }
  }

  private renderResults(sounds: SoundRef[]): void {
    this.results.replaceChildren();
    for (const sound of sounds) {
      const item = document.createElement("div");
      item.className = "search-result";
      item.draggable = true;
      item.addEventListener("dragstart", (ev) => {
        ev.dataTransfer?.setData("application/x-seqroom-sound", JSON.stringify(sound));
      });

      const play = document.createElement("button");
      play.className = "preview";
      play.textContent = "▶";
      play.title = "preview";
      play.addEventListener("click", () => void this.engine.preview(sound));

      const label = document.createElement("span");
      label.className = "result-label";
      label.textContent = `${sound.name} — ${sound.username} (${sound.duration_s.toFixed(2)}s)`;
      label.title = sound.license;

      item.append(play, label);
      this.results.appendChild(item);
    }
  }
}

function input(placeholder: string, type: string): HTMLInputElement {
  const el = document.createElement("input");
  el.type = type;
  el.placeholder = placeholder;
  return el;
}

function numberOrUndefined(value: string): number | undefined {
  return value === "" ? undefined : Number(value);
}
