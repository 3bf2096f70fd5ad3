// WebSocket wrapper: URL building, reconnect with backoff. On every
// (re)connect the server sends a fresh snapshot, which doubles as resync.

export interface RoomSocketHandlers {
  onFrame: (text: string) => void;
  onStatus?: (status: "connecting" | "open" | "closed") => void;
}

export function roomUrl(room: string, name: string): string {
  const proto = location.protocol === "https:" ? "wss:" : "ws:";
  return `${proto}//${location.host}/ws?room=${encodeURIComponent(room)}&name=${encodeURIComponent(name)}`;
}

export class RoomSocket {
  private ws: WebSocket | null = null;
  private closed = false;
  private attempts = 0;
  private queue: string[] = [];

  constructor(
    private url: string,
    private handlers: RoomSocketHandlers,
  ) {
    this.connect();
  }

  private connect(): void {
    this.handlers.onStatus?.("connecting");
    this.ws = new WebSocket(this.url);
    this.ws.onopen = () => {
      this.attempts = 0;
      this.handlers.onStatus?.("open");
      for (const text of this.queue.splice(0)) this.ws!.send(text);
    };
    this.ws.onmessage = (event) => this.handlers.onFrame(String(event.data));
    this.ws.onclose = () => {
      this.handlers.onStatus?.("closed");
      if (!this.closed && this.attempts < 8) {
        this.attempts += 1;
        setTimeout(() => this.connect(), Math.min(500 * 2 ** this.attempts, 8000));
      }
    };
  }

  send(text: string): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(text);
    } else {
      this.queue.push(text);
    }
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
