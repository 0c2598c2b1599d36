/**
 * Pending-writes queue with exactly-once delivery.
 *
 * Records carry a client-generated record_id, so a retry that races an
 * earlier success gets a 409 from the service and is treated as delivered;
 * flushing therefore never duplicates a record no matter how often it runs.
 */

import type { PostRecordResult } from "./api.js";
import type { RecordJson, ValidationOutcome } from "./types.js";

export type PostFn = (record: RecordJson) => Promise<PostRecordResult>;

export interface FlushEvent {
  record: RecordJson;
  outcome: ValidationOutcome | "duplicate";
}

export class PendingWriteQueue {
  private items: RecordJson[] = [];
  private flushing = false;

  constructor(private readonly post: PostFn) {}

  get size(): number {
    return this.items.length;
  }

  snapshot(): RecordJson[] {
    return [...this.items];
  }

  enqueue(record: RecordJson): void {
    if (this.items.some((r) => r.record_id === record.record_id)) return;
    this.items.push(record);
  }

  /**
   * Try to deliver everything, in order. Stops at the first network failure
   * (the rest stays queued for the next flush); concurrent flushes coalesce.
   */
  async flush(onDelivered: (event: FlushEvent) => void): Promise<void> {
    if (this.flushing) return;
    this.flushing = true;
    try {
      while (this.items.length > 0) {
        const record = this.items[0]!;
        let result: PostRecordResult;
        try {
          result = await this.post(record);
        } catch {
          return; // still offline; keep the queue intact
        }
        this.items.shift();
        onDelivered({ record, outcome: result.outcome ?? "duplicate" });
      }
    } finally {
      this.flushing = false;
    }
  }
}
