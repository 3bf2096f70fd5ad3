// Entry point: hash routing between the home page and a room view, and the
// wiring of session, socket, audio engine and scheduler for a live room.

import { AudioEngine } from "./audio.js";
import { RoomSocket, roomUrl } from "./net.js";
import { LookaheadScheduler } from "./scheduler.js";
import { Session } from "./session.js";
import { ChatPane } from "./ui/chat.js";
import { GridView } from "./ui/grid.js";
import { HomePage } from "./ui/home.js";
import { SearchPanel } from "./ui/search.js";

const root = document.getElementById("app")!;
let teardown: (() => void) | null = null;

function route(): void {
  teardown?.();
  teardown = null;
  root.replaceChildren();

  const match = location.hash.match(/^#\/room\/([^/?]+)/);
  if (match) {
    const name = localStorage.getItem("seqroom-name") ?? "anon";
    teardown = mountRoom(decodeURIComponent(match[1]), name);
  } else {
    root.appendChild(new HomePage((room, name) => {
      localStorage.setItem("seqroom-name", name);
      location.hash = `#/room/${encodeURIComponent(room)}`;
    }).el);
  }
}

function mountRoom(room: string, name: string): () => void {
  const engine = new AudioEngine();
  const socket = new RoomSocket(roomUrl(room, name), {
    onFrame: (text) => session.onFrame(text),
    onStatus: (status) => {
      statusEl.textContent = status === "open" ? `room ${room}` : `room ${room} (${status})`;
    },
  });
  const session = new Session(socket, room, name);

  const scheduler = new LookaheadScheduler({
    now: () => engine.now(),
    getState: () => session.state ?? { tracks: [], bpm: 120, steps: 16, epoch: 0 },
    audible: (track) => session.view.audible(track),
    trigger: (track, _step, time) => {
      const state = session.state;
      if (state?.tracks[track]) engine.trigger(state.tracks[track], time);
    },
    onStep: (step) => session.setPlayhead(step),
  });

  // Header: transport, tempo, connection status, leave link.
  const header = document.createElement("header");
  const statusEl = document.createElement("span");
  statusEl.className = "status";
  statusEl.textContent = `room ${room}`;
  const play = document.createElement("button");
  play.className = "transport";
  play.textContent = "▶ play";
  play.addEventListener("click", () => {
    if (session.view.playing) {
      scheduler.stop();
      session.setPlaying(false);
      play.textContent = "▶ play";
    } else {
      void engine.resume().then(() => {
        scheduler.start();
        session.setPlaying(true);
        play.textContent = "■ stop";
      });
    }
  });
  const bpm = document.createElement("input");
  bpm.type = "number";
  bpm.min = "40";
  bpm.max = "240";
  bpm.title = "bpm (shared)";
  bpm.addEventListener("change", () => session.setBpm(Number(bpm.value)));
  session.on("change", () => {
    const state = session.state;
    if (state && document.activeElement !== bpm) bpm.value = String(state.bpm);
  });
  const leave = document.createElement("a");
  leave.href = "#";
  leave.textContent = "← rooms";
  header.append(leave, statusEl, play, bpm);

  const noticeBar = document.createElement("div");
  noticeBar.className = "notices";
  session.on("notice", () => {
    noticeBar.textContent = session.notices[session.notices.length - 1] ?? "";
    setTimeout(() => (noticeBar.textContent = ""), 4000);
  });

  const main = document.createElement("div");
  main.className = "room-layout";
  const left = document.createElement("div");
  left.className = "room-main";
  left.append(new GridView(session, engine).el);
  const right = document.createElement("div");
  right.className = "room-side";
  right.append(new SearchPanel(engine).el, new ChatPane(session).el);
  main.append(left, right);

  root.append(header, noticeBar, main);
  // The socket URL already carries room and name; the server joins us on
  // connect and opens with a snapshot. (A bare connect would send hello.)

  return () => {
    scheduler.stop();
    socket.close();
  };
}

window.addEventListener("hashchange", route);
route();
