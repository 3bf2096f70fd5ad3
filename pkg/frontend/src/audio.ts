// Web Audio playback: fetch and decode preview files straight from the
// Freesound CDN, then trigger (whole sample or segment) at scheduled times.

import { SoundRef, Track } from "./protocol.js";

export class AudioEngine {
  readonly ctx: AudioContext;
  private buffers = new Map<number, AudioBuffer>();
  private loading = new Map<number, Promise<AudioBuffer | null>>();
  readonly unplayable = new Set<number>();

  constructor(ctx?: AudioContext) {
    this.ctx = ctx ?? new AudioContext();
  }

  now(): number {
    return this.ctx.currentTime;
  }

  async resume(): Promise<void> {
    if (this.ctx.state === "suspended") await this.ctx.resume();
  }

  /** Decode failures mark the sound unplayable; the session continues. */
  ensureLoaded(sound: SoundRef): Promise<AudioBuffer | null> {
    const cached = this.buffers.get(sound.freesound_id);
    if (cached) return Promise.resolve(cached);
    let pending = this.loading.get(sound.freesound_id);
    if (!pending) {
      pending = fetch(sound.preview_url)
        .then((res) => {
          if (!res.ok) throw new Error(`fetch ${res.status}`);
          return res.arrayBuffer();
        })
        .then((bytes) => this.ctx.decodeAudioData(bytes))
        .then((buffer) => {
          this.buffers.set(sound.freesound_id, buffer);
          this.unplayable.delete(sound.freesound_id);
          return buffer;
        })
        .catch(() => {
          this.unplayable.add(sound.freesound_id);
          return null;
        })
        .finally(() => this.loading.delete(sound.freesound_id));
      this.loading.set(sound.freesound_id, pending);
    }
    return pending;
  }

  isUnplayable(sound: SoundRef | null): boolean {
    return sound !== null && this.unplayable.has(sound.freesound_id);
  }

  buffer(soundId: number): AudioBuffer | undefined {
    return this.buffers.get(soundId);
  }

  /** Play a track's segment (or whole sample) at `time` on the audio clock. */
  trigger(track: Track, time: number): void {
    if (!track.sound) return;
    const buffer = this.buffers.get(track.sound.freesound_id);
    if (!buffer) return;
    const source = this.ctx.createBufferSource();
    source.buffer = buffer;
    const gainNode = this.ctx.createGain();
    gainNode.gain.value = track.gain;
    source.connect(gainNode).connect(this.ctx.destination);
    if (track.segment) {
      source.start(time, track.segment.start_s, track.segment.end_s - track.segment.start_s);
    } else {
      source.start(time);
    }
  }

  /** One-shot preview for the search panel. */
  async preview(sound: SoundRef): Promise<void> {
    await this.resume();
    const buffer = await this.ensureLoaded(sound);
    if (!buffer) return;
    const source = this.ctx.createBufferSource();
    source.buffer = buffer;
    source.connect(this.ctx.destination);
    source.start();
  }
}
