// Client-local view state. Solo, mute and collapse only take effect
// locally: nothing here is ever serialized into a protocol message.

export class LocalViewState {
  solo: boolean[] = [];
  mute: boolean[] = [];
  collapsed: boolean[] = [];
  playing = false;
  playheadStep = -1;

  /** Keep per-track flags aligned with the shared track array. */
  resize(trackCount: number): void {
    for (const flags of [this.solo, this.mute, this.collapsed]) {
      while (flags.length < trackCount) flags.push(false);
      flags.length = trackCount;
    }
  }

  spliceTrack(index: number): void {
    this.solo.splice(index, 1);
    this.mute.splice(index, 1);
    this.collapsed.splice(index, 1);
  }

  trackAdded(): void {
    this.solo.push(false);
    this.mute.push(false);
    this.collapsed.push(false);
  }

  anySolo(): boolean {
    return this.solo.some(Boolean);
  }

  audible(track: number): boolean {
    if (this.mute[track]) return false;
    return !this.anySolo() || !!this.solo[track];
  }
}
