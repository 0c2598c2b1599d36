/** Typed client for the student-information service. */

import type {
  AlignmentPoint,
  KpiPoint,
  LessonJson,
  LookupResponse,
  ProximitySnapshot,
  RecordJson,
  TaxonomyJson,
  ValidationOutcome,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface PostRecordResult {
  /** True once the service holds the record, including 409 duplicates. */
  delivered: boolean;
  /** Validation feedback; null when delivered===true came from a duplicate. */
  outcome: ValidationOutcome | null;
}

export class SisClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      headers: { accept: "application/json" },
    });
    if (!response.ok) {
      throw new Error(`GET ${path} failed: ${response.status}`);
    }
    return (await response.json()) as T;
  }

  taxonomy(): Promise<TaxonomyJson> {
    return this.getJson("/taxonomy");
  }

  lookupByUdid(udid: string): Promise<LookupResponse> {
    return this.getJson(`/students/by-udid/${udid}`);
  }

  lessons(teacherId: string): Promise<LessonJson[]> {
    return this.getJson(`/lessons?teacher_id=${encodeURIComponent(teacherId)}`);
  }

  proximityCurrent(teacherId: string): Promise<ProximitySnapshot> {
    return this.getJson(`/proximity/current?teacher_id=${encodeURIComponent(teacherId)}`);
  }

  async alignmentSeries(teacherId: string): Promise<AlignmentPoint[]> {
    const body = await this.getJson<{ series: AlignmentPoint[] }>(
      `/reports/teachers/${encodeURIComponent(teacherId)}/alignment?bucket=week`,
    );
    return body.series;
  }

  async kpiSeries(): Promise<KpiPoint[]> {
    const body = await this.getJson<{ series: KpiPoint[] }>("/reports/school/kpi?bucket=week");
    return body.series;
  }

  async records(params: Record<string, string>): Promise<RecordJson[]> {
    const query = new URLSearchParams(params).toString();
    return this.getJson(`/records?${query}`);
  }

  /**
   * Write one behavior record. A 409 means a retry raced an earlier success:
   * the record is already stored, so the write is treated as delivered.
   */
  async postRecord(record: RecordJson): Promise<PostRecordResult> {
    const response = await this.fetchImpl(`${this.baseUrl}/records`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(record),
    });
    if (response.status === 201) {
      const body = (await response.json()) as { outcome: ValidationOutcome };
      return { delivered: true, outcome: body.outcome };
    }
    if (response.status === 409) {
      return { delivered: true, outcome: null };
    }
    throw new Error(`POST /records failed: ${response.status}`);
  }
}
