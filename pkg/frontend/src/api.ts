// Server HTTP API: room listing and the Freesound search proxy.

import { SoundRef } from "./protocol.js";

export interface RoomInfo {
  id: string;
  user_count: number;
  track_count: number;
}

export interface SearchOutcome {
  ok: boolean;
  total: number;
  results: SoundRef[];
  error?: string;
}

export async function fetchRooms(): Promise<RoomInfo[]> {
  const res = await fetch("/api/rooms");
  if (!res.ok) throw new Error(`rooms: ${res.status}`);
  return (await res.json()) as RoomInfo[];
}

export async function searchSounds(
  query: string,
  minDur?: number,
  maxDur?: number,
  page = 1,
): Promise<SearchOutcome> {
  const params = new URLSearchParams({ q: query, page: String(page) });
  if (minDur !== undefined) params.set("min_dur", String(minDur));
  if (maxDur !== undefined) params.set("max_dur", String(maxDur));
  const res = await fetch(`/api/search?${params}`);
  const body = await res.json();
  if (!res.ok) {
    return { ok: false, total: 0, results: [], error: body.error ?? `http ${res.status}` };
  }
  return { ok: true, total: body.total, results: body.results as SoundRef[] };
}
