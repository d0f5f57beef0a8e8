import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import type { LiveFrame } from "../src/api.js";
import { LiveFeed, type FeedStatus } from "../src/live.js";
import { fakeSocketFactory } from "./helpers.js";

beforeEach(() => vi.useFakeTimers());
afterEach(() => vi.useRealTimers());

function feedWith() {
  const { factory, sockets } = fakeSocketFactory();
  const frames: LiveFrame[] = [];
  const statuses: FeedStatus[] = [];
  const feed = new LiveFeed(
    "ws://test/live",
    { onFrame: (f) => frames.push(f), onStatus: (s) => statuses.push(s) },
    factory,
  );
  return { feed, sockets, frames, statuses };
}

describe("LiveFeed", () => {
  it("parses frames once the socket opens", () => {
    const { feed, sockets, frames, statuses } = feedWith();
    feed.start();
    expect(statuses).toEqual(["connecting"]);
    sockets[0]!.serverOpen();
    expect(statuses).toEqual(["connecting", "open"]);
    sockets[0]!.serverSend({ seq: 1, event_rate: 10, active_size: 5, position: 7, pending: 2, events: [] });
    expect(frames).toHaveLength(1);
    expect(frames[0]!.active_size).toBe(5);
  });

  it("reconnects with backoff and reports the gap visibly", () => {
    const { feed, sockets, statuses } = feedWith();
    feed.start();
    sockets[0]!.serverOpen();
    sockets[0]!.serverDrop();
    expect(statuses.at(-1)).toBe("reconnecting");
    expect(sockets).toHaveLength(1);
    vi.advanceTimersByTime(500);
    expect(sockets).toHaveLength(2); // new connection attempt
    sockets[1]!.serverOpen();
    expect(statuses.at(-1)).toBe("open");
    // a second drop backs off further
    sockets[1]!.serverDrop();
    vi.advanceTimersByTime(499);
    expect(sockets).toHaveLength(2);
    vi.advanceTimersByTime(1);
    expect(sockets).toHaveLength(3);
  });

  it("stop() closes the socket and stays closed", () => {
    const { feed, sockets, statuses } = feedWith();
    feed.start();
    sockets[0]!.serverOpen();
    feed.stop();
    expect(statuses.at(-1)).toBe("closed");
    expect(sockets[0]!.closed).toBe(true);
    vi.advanceTimersByTime(60_000);
    expect(sockets).toHaveLength(1); // no zombie reconnect
  });

  it("survives malformed frames", () => {
    const { feed, sockets, frames } = feedWith();
    const quiet = vi.spyOn(console, "error").mockImplementation(() => {});
    feed.start();
    sockets[0]!.serverOpen();
    sockets[0]!.onmessage?.({ data: "not json" });
    sockets[0]!.serverSend({ seq: 2, event_rate: 0, active_size: 1, position: 1, pending: 0, events: [] });
    expect(frames).toHaveLength(1);
    quiet.mockRestore();
  });
});
