// Chat pane and presence indicator: chronological messages in broadcast
// order, the live member list, and join/leave notices inline.

import { Session } from "../session.js";

export class ChatPane {
  readonly el = document.createElement("div");
  private log = document.createElement("div");
  private members = document.createElement("div");
  private seenChat = 0;
  private lastUsers: string[] = [];

  constructor(private session: Session) {
    this.el.className = "chat-pane";
    this.members.className = "members";
    this.log.className = "chat-log";

    const form = document.createElement("form");
    const text = document.createElement("input");
    text.placeholder = "say something…";
    text.maxLength = 2000;
    const send = document.createElement("button");
    send.textContent = "send";
    form.append(text, send);
    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      session.sendChat(text.value.trim());
      text.value = "";
    });

    this.el.append(this.members, this.log, form);
    session.on("chat", () => this.renderChat());
    session.on("presence", () => this.renderPresence());
    session.on("change", () => this.renderMembers());
    this.renderMembers();
  }

  private renderMembers(): void {
    const users = this.session.replica.users;
    this.members.textContent = `${users.length} in room: ${users.join(", ")}`;
  }

  private renderChat(): void {
    // Own messages appear only here, once the server's echo orders them.
    const entries = this.session.replica.chatLog;
    for (; this.seenChat < entries.length; this.seenChat++) {
      const entry = entries[this.seenChat];
      const line = document.createElement("div");
      line.className = "chat-line";
      line.textContent = `${entry.from}: ${entry.text}`;
      this.log.appendChild(line);
    }
    this.log.scrollTop = this.log.scrollHeight;
  }

  private renderPresence(): void {
    const users = this.session.replica.users;
    for (const name of users) {
      if (!this.lastUsers.includes(name)) this.notice(`${name} joined`);
    }
    for (const name of this.lastUsers) {
      if (!users.includes(name)) this.notice(`${name} left`);
    }
    this.lastUsers = [...users];
    this.renderMembers();
  }

  private notice(text: string): void {
    const line = document.createElement("div");
    line.className = "chat-line notice";
    line.textContent = `· ${text}`;
    this.log.appendChild(line);
    this.log.scrollTop = this.log.scrollHeight;
  }
}
