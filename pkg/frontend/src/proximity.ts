/**
 * Nearest-student feed: server-sent events first, polling as fallback.
 *
 * The service applies hysteresis before publishing, so every snapshot seen
 * here is already stable; this module only moves bytes and reports how it is
 * connected. A dropped stream flips the feed to 1 s polling immediately
 * (well inside the 3 s contract) and keeps retrying the stream; when polls
 * fail too, the feed reports offline rather than staying silently stale.
 */

import type { FetchLike } from "./api.js";
import type { Connection } from "./state.js";
import type { ProximitySnapshot } from "./types.js";

export interface ProximityFeedOptions {
  baseUrl: string;
  teacherId: string;
  onSnapshot: (snapshot: ProximitySnapshot) => void;
  onConnection: (connection: Connection) => void;
  fetchImpl?: FetchLike;
  pollIntervalMs?: number;
  streamRetryMs?: number;
}

export class ProximityFeed {
  private readonly fetchImpl: FetchLike;
  private readonly pollIntervalMs: number;
  private readonly streamRetryMs: number;
  private active = false;
  private pollTimer: ReturnType<typeof setInterval> | null = null;
  private abort: AbortController | null = null;

  constructor(private readonly options: ProximityFeedOptions) {
    this.fetchImpl = options.fetchImpl ?? ((input, init) => fetch(input, init));
    this.pollIntervalMs = options.pollIntervalMs ?? 1000;
    this.streamRetryMs = options.streamRetryMs ?? 5000;
  }

  start(): void {
    if (this.active) return;
    this.active = true;
    void this.streamLoop();
  }

  stop(): void {
    this.active = false;
    this.abort?.abort();
    this.stopPolling();
  }

  private get streamUrl(): string {
    const teacher = encodeURIComponent(this.options.teacherId);
    return `${this.options.baseUrl}/proximity/stream?teacher_id=${teacher}`;
  }

  private get currentUrl(): string {
    const teacher = encodeURIComponent(this.options.teacherId);
    return `${this.options.baseUrl}/proximity/current?teacher_id=${teacher}`;
  }

  private async streamLoop(): Promise<void> {
    while (this.active) {
      try {
        await this.consumeStream();
      } catch {
        // fall through to polling below
      }
      if (!this.active) return;
      this.options.onConnection("polling");
      this.startPolling();
      await sleep(this.streamRetryMs);
    }
  }

  /** Read SSE frames until the server closes or the feed is stopped. */
  private async consumeStream(): Promise<void> {
    this.abort = new AbortController();
    const response = await this.fetchImpl(this.streamUrl, {
      signal: this.abort.signal,
      headers: { accept: "text/event-stream" },
    });
    if (!response.ok || !response.body) {
      throw new Error(`stream unavailable: ${response.status}`);
    }
    this.options.onConnection("live");
    this.stopPolling();

    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    while (this.active) {
      const { done, value } = await reader.read();
      if (done || !this.active) break;
      buffer += decoder.decode(value, { stream: true });
      let boundary;
      while ((boundary = buffer.indexOf("\n\n")) >= 0) {
        const frame = buffer.slice(0, boundary);
        buffer = buffer.slice(boundary + 2);
        for (const line of frame.split("\n")) {
          if (line.startsWith("data: ")) {
            this.options.onSnapshot(JSON.parse(line.slice(6)) as ProximitySnapshot);
          }
        }
      }
    }
  }

  private startPolling(): void {
    if (this.pollTimer !== null) return;
    this.pollTimer = setInterval(() => void this.pollOnce(), this.pollIntervalMs);
  }

  private stopPolling(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  private async pollOnce(): Promise<void> {
    try {
      const response = await this.fetchImpl(this.currentUrl, {
        headers: { accept: "application/json" },
      });
      if (!response.ok) throw new Error(`poll failed: ${response.status}`);
      this.options.onSnapshot((await response.json()) as ProximitySnapshot);
      this.options.onConnection("polling");
    } catch {
      this.options.onConnection("offline");
    }
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
