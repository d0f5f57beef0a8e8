// Shared fakes: canned HTTP responses keyed by "METHOD path", and a
// hand-driven socket standing in for the /live websocket.

import type { AlertDoc, ServiceState } from "../src/api.js";
import type { SocketLike } from "../src/live.js";

export function makeState(overrides: Partial<ServiceState> = {}): ServiceState {
  return {
    mode: "halving",
    m: 500,
    position: 1000,
    active_size: 500,
    alerts: 3,
    inspections: 0,
    confirmed: 0,
    pending: 3,
    paused: false,
    pool_exhausted: false,
    seq: 3,
    mistakes: 0,
    theta: 0.5,
    alpha: 1.0,
    ...overrides,
  };
}

export function makeAlert(id: number, overrides: Partial<AlertDoc> = {}): AlertDoc {
  return {
    alert_id: id,
    event_id: id * 10,
    position: id * 10,
    excerpt: `message number ${id}`,
    payload: `message number ${id}`,
    flaggers: [1, 2, 3],
    winner: null,
    winning_bid: null,
    enqueued_at: 1700000000 + id,
    ...overrides,
  };
}

export type Route = (init?: RequestInit) => { status: number; body: unknown };

/** fetch stand-in: routes["GET /state"] = () => ({status: 200, body}). */
export function fakeFetch(routes: Record<string, Route>) {
  const calls: Array<{ key: string; init?: RequestInit }> = [];
  const fn = async (input: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const path = input.replace(/^https?:\/\/[^/]+/, "");
    const key = `${method} ${path}`;
    calls.push({ key, init });
    const route = routes[key];
    if (!route) {
      throw new Error(`no fake route for ${key}`);
    }
    const { status, body } = route(init);
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  };
  return { fn, calls };
}

export class FakeSocket implements SocketLike {
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  closed = false;

  constructor(readonly url: string) {}

  close(): void {
    this.closed = true;
    this.onclose?.();
  }

  // test-side controls
  serverOpen(): void {
    this.onopen?.();
  }

  serverSend(frame: unknown): void {
    this.onmessage?.({ data: JSON.stringify(frame) });
  }

  serverDrop(): void {
    this.onclose?.();
  }
}

/** Factory that records every socket it hands out. */
export function fakeSocketFactory() {
  const sockets: FakeSocket[] = [];
  const factory = (url: string) => {
    const socket = new FakeSocket(url);
    sockets.push(socket);
    return socket;
  };
  return { factory, sockets };
}

export function flushPromises(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
