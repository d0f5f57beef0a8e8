// Websocket wrapper for the /live feed: parses frames, reconnects with
// capped exponential backoff, and surfaces every status change so the
// dashboard can show when the feed is down.

import type { LiveFrame } from "./api.js";

export type FeedStatus = "connecting" | "open" | "reconnecting" | "closed";

export interface FeedHandlers {
  onFrame: (frame: LiveFrame) => void;
  onStatus: (status: FeedStatus) => void;
}

// minimal surface so tests can substitute a fake socket
export interface SocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

const MAX_BACKOFF_MS = 15_000;

export class LiveFeed {
  private socket: SocketLike | null = null;
  private attempts = 0;
  private stopped = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly url: string,
    private readonly handlers: FeedHandlers,
    private readonly connectSocket: SocketFactory = (u) => new WebSocket(u) as SocketLike,
  ) {}

  start(): void {
    this.stopped = false;
    this.open("connecting");
  }

  private open(status: FeedStatus): void {
    this.handlers.onStatus(status);
    const socket = this.connectSocket(this.url);
    this.socket = socket;

    socket.onopen = () => {
      this.attempts = 0;
      this.handlers.onStatus("open");
    };
    socket.onerror = () => {
      socket.close();
    };
    socket.onclose = () => {
      if (this.socket !== socket) {
        return; // superseded by a newer connection
      }
      this.socket = null;
      if (!this.stopped) {
        this.scheduleReconnect();
      }
    };
    socket.onmessage = (event) => {
      try {
        this.handlers.onFrame(JSON.parse(event.data) as LiveFrame);
      } catch (err) {
        console.error("bad live frame", err);
      }
    };
  }

  private scheduleReconnect(): void {
    const delay = Math.min(500 * 2 ** this.attempts, MAX_BACKOFF_MS);
    this.attempts += 1;
    this.handlers.onStatus("reconnecting");
    this.timer = setTimeout(() => this.open("reconnecting"), delay);
  }

  stop(): void {
    this.stopped = true;
    if (this.timer) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (this.socket) {
      this.socket.close();
      this.socket = null;
    }
    this.handlers.onStatus("closed");
  }
}
