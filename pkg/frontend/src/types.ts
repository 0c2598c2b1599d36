/** Wire shapes of the student-information service, field-for-field. */

export interface StudentJson {
  student_id: string;
  name: string;
  year_level: number;
  udid: string | null;
}

export interface RecordJson {
  record_id: string;
  student_id: string;
  teacher_id: string;
  lesson_id: string;
  category_code: string;
  rating: number;
  comment: string | null;
  event_ts: string;
  capture_ts: string;
}

export type ValidationOutcome =
  | "valid"
  | "unknown_category"
  | "rating_out_of_domain"
  | "timestamp_inverted";

export interface CategoryJson {
  code: string;
  label: string;
  valence: "positive" | "negative";
  rating_domain: [number, number];
}

export interface TaxonomyJson {
  categories: CategoryJson[];
}

export interface LessonJson {
  lesson_id: string;
  teacher_id: string;
  roster: string[];
  start: string;
  end: string;
}

export interface ProximitySnapshot {
  teacher_id: string;
  udid: string | null;
  student: StudentJson | null;
}

export interface LookupResponse {
  student: StudentJson;
  recent_records: RecordJson[];
}

export interface AlignmentPoint {
  week_start: string;
  alignment: number;
  positive_ratio: number;
  cadence_score: number;
  latency_score: number;
  n_records: number;
}

export interface KpiPoint {
  week_start: string;
  kpi: number;
  mean_alignment: number;
  quality_index: number;
  coverage: number;
  n_records: number;
}

export interface ApiErrorBody {
  code: "not_found" | "conflict" | "malformed" | "validation_warning";
  detail: string;
}
