/**
 * Headless console controller: wires the proximity feed, the student card,
 * appraisal writes with their retry queue, and the two home series into one
 * observable view state. The browser page and the end-to-end tests drive the
 * same controller; only the rendering differs.
 */

import { SisClient, type FetchLike } from "./api.js";
import { ProximityFeed } from "./proximity.js";
import { PendingWriteQueue } from "./queue.js";
import {
  ConsoleStore,
  ackWrite,
  applyCard,
  applyHome,
  applyNearest,
  categoryAgreement,
  enqueueWrite,
  markHomeStale,
  setConnection,
} from "./state.js";
import type { CategoryJson, LessonJson, RecordJson, TaxonomyJson } from "./types.js";

export interface ConsoleOptions {
  baseUrl: string;
  teacherId: string;
  fetchImpl?: FetchLike;
  pollIntervalMs?: number;
  streamRetryMs?: number;
  homeRefreshMs?: number;
  now?: () => Date;
  idFactory?: () => string;
}

export class ConsoleController {
  readonly store: ConsoleStore;
  readonly client: SisClient;
  private readonly feed: ProximityFeed;
  private readonly queue: PendingWriteQueue;
  private readonly now: () => Date;
  private readonly idFactory: () => string;
  private homeTimer: ReturnType<typeof setInterval> | null = null;
  private taxonomyCache: TaxonomyJson = { categories: [] };
  private lessons: LessonJson[] = [];

  constructor(private readonly options: ConsoleOptions) {
    this.store = new ConsoleStore(options.teacherId);
    this.client = new SisClient(options.baseUrl, options.fetchImpl);
    this.now = options.now ?? (() => new Date());
    this.idFactory = options.idFactory ?? (() => crypto.randomUUID());
    this.queue = new PendingWriteQueue((record) =>
      // capture_ts is stamped at send time: it records when the write
      // actually reached the store, not when the tap happened.
      this.client.postRecord({ ...record, capture_ts: this.now().toISOString() }),
    );
    this.feed = new ProximityFeed({
      baseUrl: options.baseUrl,
      teacherId: options.teacherId,
      fetchImpl: options.fetchImpl,
      pollIntervalMs: options.pollIntervalMs,
      streamRetryMs: options.streamRetryMs,
      onConnection: (connection) => {
        this.store.update((s) => setConnection(s, connection));
        if (connection !== "offline") void this.flushPending();
      },
      onSnapshot: (snapshot) => void this.onNearest(snapshot.udid),
    });
  }

  async start(): Promise<void> {
    [this.taxonomyCache, this.lessons] = await Promise.all([
      this.client.taxonomy(),
      this.client.lessons(this.options.teacherId),
    ]);
    this.feed.start();
    await this.refreshHome();
    const refreshMs = this.options.homeRefreshMs ?? 15_000;
    this.homeTimer = setInterval(() => void this.refreshHome(), refreshMs);
  }

  stop(): void {
    this.feed.stop();
    if (this.homeTimer !== null) {
      clearInterval(this.homeTimer);
      this.homeTimer = null;
    }
  }

  taxonomy(): TaxonomyJson {
    return this.taxonomyCache;
  }

  private async onNearest(udid: string | null): Promise<void> {
    const before = this.store.get();
    this.store.update((s) => applyNearest(s, udid));
    if (this.store.get() === before || udid === null) return;
    try {
      const lookup = await this.client.lookupByUdid(udid);
      this.store.update((s) =>
        applyCard(s, {
          student: lookup.student,
          recentRecords: lookup.recent_records,
          agreement: categoryAgreement(lookup.recent_records, this.taxonomyCache),
        }),
      );
    } catch {
      // nothing to show; the card stays empty until the next snapshot
    }
  }

  /** The lesson a write belongs to: the one covering now, else the latest. */
  currentLesson(): LessonJson | null {
    const at = this.now().toISOString();
    const covering = this.lessons.find((l) => l.start <= at && at <= l.end);
    if (covering) return covering;
    return this.lessons.length > 0 ? this.lessons[this.lessons.length - 1]! : null;
  }

  defaultRating(category: CategoryJson): number {
    const [lo, hi] = category.rating_domain;
    return Math.round((lo + hi) / 2);
  }

  /**
   * The two-tap appraisal: the category tap picked `categoryCode`, the
   * confirm tap calls this. The record is queued first, so a network failure
   * parks it for retry instead of losing it; delivery acknowledgments drain
   * the queue and surface the service's validation outcome as a badge.
   */
  async submitAppraisal(
    categoryCode: string,
    rating?: number,
    comment?: string,
  ): Promise<RecordJson | null> {
    const card = this.store.get().card;
    if (!card) return null;
    const lesson = this.currentLesson();
    if (!lesson) throw new Error("no lesson to attribute the record to");
    const category = this.taxonomyCache.categories.find((c) => c.code === categoryCode);
    const tapTime = this.now().toISOString();
    const record: RecordJson = {
      record_id: this.idFactory(),
      student_id: card.student.student_id,
      teacher_id: this.options.teacherId,
      lesson_id: lesson.lesson_id,
      category_code: categoryCode,
      rating: rating ?? (category ? this.defaultRating(category) : 0),
      comment: comment ?? null,
      event_ts: tapTime,
      capture_ts: tapTime,
    };
    this.queue.enqueue(record);
    this.store.update((s) => enqueueWrite(s, record));
    await this.flushPending();
    return record;
  }

  async flushPending(): Promise<void> {
    await this.queue.flush(({ record, outcome }) => {
      this.store.update((s) => ackWrite(s, record.record_id, outcome));
    });
  }

  async refreshHome(): Promise<void> {
    try {
      const [alignment, kpi] = await Promise.all([
        this.client.alignmentSeries(this.options.teacherId),
        this.client.kpiSeries(),
      ]);
      this.store.update((s) => applyHome(s, alignment, kpi));
    } catch {
      this.store.update((s) => markHomeStale(s));
    }
  }
}
