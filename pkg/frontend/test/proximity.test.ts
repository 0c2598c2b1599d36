import { afterEach, describe, expect, it } from "vitest";

import { ProximityFeed } from "../src/proximity.js";
import type { Connection } from "../src/state.js";
import type { ProximitySnapshot } from "../src/types.js";

function snapshot(udid: string | null): ProximitySnapshot {
  return { teacher_id: "t1", udid, student: null };
}

class FakeStream {
  private controller!: ReadableStreamDefaultController<Uint8Array>;
  readonly body = new ReadableStream<Uint8Array>({
    start: (controller) => {
      this.controller = controller;
    },
  });

  emit(payload: unknown): void {
    this.controller.enqueue(new TextEncoder().encode(`data: ${JSON.stringify(payload)}\n\n`));
  }

  close(): void {
    this.controller.close();
  }

  fail(): void {
    this.controller.error(new Error("stream dropped"));
  }
}

interface Harness {
  feed: ProximityFeed;
  streams: FakeStream[];
  snapshots: ProximitySnapshot[];
  connections: Connection[];
  pollCount: () => number;
  setPollsFailing: (failing: boolean) => void;
}

function makeHarness(opts: { streamAvailable?: boolean } = {}): Harness {
  const streams: FakeStream[] = [];
  const snapshots: ProximitySnapshot[] = [];
  const connections: Connection[] = [];
  let polls = 0;
  let pollsFailing = false;

  const fetchImpl = async (input: string): Promise<Response> => {
    if (input.includes("/proximity/stream")) {
      if (opts.streamAvailable === false) {
        return new Response("gone", { status: 503 });
      }
      const stream = new FakeStream();
      streams.push(stream);
      return new Response(stream.body, {
        status: 200,
        headers: { "content-type": "text/event-stream" },
      });
    }
    if (input.includes("/proximity/current")) {
      polls++;
      if (pollsFailing) throw new Error("network down");
      return new Response(JSON.stringify(snapshot("poll-udid")), {
        status: 200,
        headers: { "content-type": "application/json" },
      });
    }
    throw new Error(`unexpected fetch ${input}`);
  };

  const feed = new ProximityFeed({
    baseUrl: "http://fake",
    teacherId: "t1",
    fetchImpl,
    pollIntervalMs: 20,
    streamRetryMs: 60,
    onSnapshot: (s) => snapshots.push(s),
    onConnection: (c) => connections.push(c),
  });
  return {
    feed,
    streams,
    snapshots,
    connections,
    pollCount: () => polls,
    setPollsFailing: (failing) => {
      pollsFailing = failing;
    },
  };
}

async function waitFor(check: () => boolean, timeoutMs = 3000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!check()) {
    if (Date.now() > deadline) throw new Error("condition never became true");
    await new Promise((resolve) => setTimeout(resolve, 5));
  }
}

let activeFeed: ProximityFeed | null = null;
afterEach(() => activeFeed?.stop());

describe("ProximityFeed", () => {
  it("delivers stream snapshots and reports live", async () => {
    const h = makeHarness();
    activeFeed = h.feed;
    h.feed.start();
    await waitFor(() => h.streams.length === 1);
    h.streams[0]!.emit(snapshot("u1"));
    h.streams[0]!.emit(snapshot("u1"));
    h.streams[0]!.emit(snapshot("u2"));
    await waitFor(() => h.snapshots.length === 3);
    expect(h.connections[0]).toBe("live");
    expect(h.snapshots.map((s) => s.udid)).toEqual(["u1", "u1", "u2"]);
    expect(h.pollCount()).toBe(0);
  });

  it("falls back to polling within 3 s of a stream drop", async () => {
    const h = makeHarness();
    activeFeed = h.feed;
    h.feed.start();
    await waitFor(() => h.streams.length === 1);
    h.streams[0]!.emit(snapshot("u1"));
    await waitFor(() => h.snapshots.length === 1);

    const droppedAt = Date.now();
    h.streams[0]!.fail();
    await waitFor(() => h.connections.includes("polling"));
    expect(Date.now() - droppedAt).toBeLessThan(3000);
    await waitFor(() => h.pollCount() >= 2);
    expect(h.snapshots.some((s) => s.udid === "poll-udid")).toBe(true);
  });

  it("reconnects the stream after a drop and goes back to live", async () => {
    const h = makeHarness();
    activeFeed = h.feed;
    h.feed.start();
    await waitFor(() => h.streams.length === 1);
    h.streams[0]!.close();
    await waitFor(() => h.streams.length === 2);
    h.streams[1]!.emit(snapshot("u9"));
    await waitFor(() => h.snapshots.some((s) => s.udid === "u9"));
    expect(h.connections.at(-1)).toBe("live");
  });

  it("reports offline when polls fail too, then recovers", async () => {
    const h = makeHarness({ streamAvailable: false });
    activeFeed = h.feed;
    h.setPollsFailing(true);
    h.feed.start();
    await waitFor(() => h.connections.includes("offline"));
    h.setPollsFailing(false);
    await waitFor(() => h.snapshots.length >= 1);
    expect(h.connections.at(-1)).toBe("polling");
  });

  it("stop() silences the feed", async () => {
    const h = makeHarness();
    activeFeed = h.feed;
    h.feed.start();
    await waitFor(() => h.streams.length === 1);
    h.feed.stop();
    h.streams[0]!.emit(snapshot("late"));
    await new Promise((resolve) => setTimeout(resolve, 50));
    expect(h.snapshots).toHaveLength(0);
  });
});
