/**
 * Console view state and its pure update functions.
 *
 * Every update takes the previous state and returns either a new state object
 * or the same object when nothing changed; renderers subscribe to identity
 * changes, so returning the same object is what makes duplicate proximity
 * snapshots cause no re-render.
 */

import type {
  AlignmentPoint,
  KpiPoint,
  RecordJson,
  StudentJson,
  TaxonomyJson,
  ValidationOutcome,
} from "./types.js";

export type Connection = "live" | "polling" | "offline";

export interface StudentCard {
  student: StudentJson;
  recentRecords: RecordJson[];
  /** [category code, agreement in 0..1] for categories rated by >= 2 teachers. */
  agreement: Array<[string, number]>;
}

export interface PendingWrite {
  record: RecordJson;
  attempts: number;
}

export interface OutcomeBadge {
  recordId: string;
  categoryCode: string;
  outcome: ValidationOutcome | "queued" | "duplicate";
}

export interface HomeSeries {
  alignment: AlignmentPoint[];
  kpi: KpiPoint[];
  stale: boolean;
  loaded: boolean;
}

export interface ConsoleViewState {
  teacherId: string;
  nearestUdid: string | null;
  card: StudentCard | null;
  pendingWrites: PendingWrite[];
  badges: OutcomeBadge[];
  home: HomeSeries;
  connection: Connection;
}

export function initialState(teacherId: string): ConsoleViewState {
  return {
    teacherId,
    nearestUdid: null,
    card: null,
    pendingWrites: [],
    badges: [],
    home: { alignment: [], kpi: [], stale: false, loaded: false },
    connection: "offline",
  };
}

const MAX_BADGES = 5;

function pstdev(values: number[]): number {
  const mean = values.reduce((a, b) => a + b, 0) / values.length;
  const variance = values.reduce((a, b) => a + (b - mean) ** 2, 0) / values.length;
  return Math.sqrt(variance);
}

/**
 * Per-category rating agreement across teachers, from the card's recent
 * records: 1 - pstdev(ratings) / half-width of the category's rating domain,
 * clamped to [0, 1]. Categories rated by fewer than two distinct teachers,
 * or unknown to the taxonomy, are omitted.
 */
export function categoryAgreement(
  records: RecordJson[],
  taxonomy: TaxonomyJson,
): Array<[string, number]> {
  const byCode = new Map<string, RecordJson[]>();
  for (const record of records) {
    const group = byCode.get(record.category_code) ?? [];
    group.push(record);
    byCode.set(record.category_code, group);
  }
  const out: Array<[string, number]> = [];
  for (const code of [...byCode.keys()].sort()) {
    const group = byCode.get(code)!;
    if (new Set(group.map((r) => r.teacher_id)).size < 2) continue;
    const category = taxonomy.categories.find((c) => c.code === code);
    if (!category) continue;
    const [lo, hi] = category.rating_domain;
    const halfWidth = (hi - lo) / 2;
    const spread = pstdev(group.map((r) => r.rating));
    const score = halfWidth === 0 ? (spread === 0 ? 1 : 0) : 1 - spread / halfWidth;
    out.push([code, Math.min(1, Math.max(0, score))]);
  }
  return out;
}

/** Apply a proximity snapshot; an unchanged udid returns the same state. */
export function applyNearest(
  state: ConsoleViewState,
  udid: string | null,
): ConsoleViewState {
  if (udid === state.nearestUdid) return state;
  return { ...state, nearestUdid: udid, card: null };
}

export function applyCard(state: ConsoleViewState, card: StudentCard): ConsoleViewState {
  if (state.nearestUdid === null || card.student.udid !== state.nearestUdid) return state;
  return { ...state, card };
}

export function setConnection(state: ConsoleViewState, connection: Connection): ConsoleViewState {
  if (connection === state.connection) return state;
  return { ...state, connection };
}

export function enqueueWrite(state: ConsoleViewState, record: RecordJson): ConsoleViewState {
  return {
    ...state,
    pendingWrites: [...state.pendingWrites, { record, attempts: 0 }],
    badges: pushBadge(state.badges, {
      recordId: record.record_id,
      categoryCode: record.category_code,
      outcome: "queued",
    }),
  };
}

/** Drop an acknowledged write from the queue and show its outcome badge. */
export function ackWrite(
  state: ConsoleViewState,
  recordId: string,
  outcome: ValidationOutcome | "duplicate",
): ConsoleViewState {
  const pendingWrites = state.pendingWrites.filter((w) => w.record.record_id !== recordId);
  const badges = pushBadge(
    state.badges.filter((b) => b.recordId !== recordId),
    {
      recordId,
      categoryCode:
        state.pendingWrites.find((w) => w.record.record_id === recordId)?.record.category_code ??
        "",
      outcome,
    },
  );
  return { ...state, pendingWrites, badges };
}

export function bumpAttempt(state: ConsoleViewState, recordId: string): ConsoleViewState {
  return {
    ...state,
    pendingWrites: state.pendingWrites.map((w) =>
      w.record.record_id === recordId ? { ...w, attempts: w.attempts + 1 } : w,
    ),
  };
}

export function applyHome(
  state: ConsoleViewState,
  alignment: AlignmentPoint[],
  kpi: KpiPoint[],
): ConsoleViewState {
  return { ...state, home: { alignment, kpi, stale: false, loaded: true } };
}

export function markHomeStale(state: ConsoleViewState): ConsoleViewState {
  if (state.home.stale || !state.home.loaded) return state;
  return { ...state, home: { ...state.home, stale: true } };
}

function pushBadge(badges: OutcomeBadge[], badge: OutcomeBadge): OutcomeBadge[] {
  return [...badges, badge].slice(-MAX_BADGES);
}

/** Minimal observable wrapper; listeners fire only on state identity change. */
export class ConsoleStore {
  private listeners: Array<(state: ConsoleViewState) => void> = [];
  private state: ConsoleViewState;

  constructor(teacherId: string) {
    this.state = initialState(teacherId);
  }

  get(): ConsoleViewState {
    return this.state;
  }

  update(fn: (state: ConsoleViewState) => ConsoleViewState): void {
    const next = fn(this.state);
    if (next === this.state) return;
    this.state = next;
    for (const listener of this.listeners) listener(next);
  }

  subscribe(listener: (state: ConsoleViewState) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }
}
