// Home page: pick a display name, choose a room.

import { RoomInfo, fetchRooms } from "../api.js";

export class HomePage {
  readonly el = document.createElement("div");

  constructor(private onEnter: (room: string, name: string) => void) {
    this.el.className = "home";
    void this.render();
  }

  private async render(): Promise<void> {
    this.el.replaceChildren();
    const title = document.createElement("h1");
    title.textContent = "seqroom";
    const blurb = document.createElement("p");
    blurb.textContent = "Pick a room and build a loop together.";

    const nameRow = document.createElement("div");
    nameRow.className = "name-row";
    const name = document.createElement("input");
    name.placeholder = "your name";
    name.value = localStorage.getItem("seqroom-name") ?? "";
    nameRow.append("join as ", name);

    const list = document.createElement("div");
    list.className = "room-list";
    this.el.append(title, blurb, nameRow, list);

    try {
      const rooms = await fetchRooms();
      if (!rooms.length) list.textContent = "no rooms configured";
      rooms.forEach((room) => list.appendChild(this.roomCard(room, name)));
    } catch {
      list.textContent = "could not reach the server";
      const retry = document.createElement("button");
      retry.textContent = "retry";
      retry.addEventListener("click", () => void this.render());
      list.appendChild(retry);
    }
  }

  private roomCard(room: RoomInfo, name: HTMLInputElement): HTMLElement {
    const card = document.createElement("button");
    card.className = "room-card";
    card.textContent = `${room.id} — ${room.user_count} user(s), ${room.track_count} track(s)`;
    card.addEventListener("click", () => {
      const display = name.value.trim() || "anon";
      localStorage.setItem("seqroom-name", display);
      this.onEnter(room.id, display);
    });
    return card;
  }
}
