"""Continuous-improvement reports: per-teacher best-practice alignment and
whole-school strategy KPIs, the two live home-screen feeds.

Best practice is quantified by a configurable policy (positive-to-negative
feedback ratio target, minimum records per lesson, feedback latency bound);
component scores are equally weighted into an alignment score, and teachers
are placed against their peers by percentile. The school KPI folds mean
alignment, the quality index, and roster coverage into one number.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, time, timedelta, timezone
from statistics import mean
from typing import Sequence

from .domain import BehaviorRecord, BehaviorTaxonomy, Lesson, Valence
from .quality import (
    DIMENSIONS,
    QualityConfig,
    _agreement,
    capture_latency_s,
    quality_report,
)


@dataclass(frozen=True)
class BestPracticePolicy:
    target_positive_ratio: float = 0.8
    min_records_per_lesson: int = 3
    max_feedback_latency_s: float = 300.0

    def __post_init__(self) -> None:
        if not 0 <= self.target_positive_ratio <= 1:
            raise ValueError("target_positive_ratio must be in [0, 1]")
        if self.min_records_per_lesson < 0:
            raise ValueError("min_records_per_lesson must be non-negative")
        if self.max_feedback_latency_s <= 0:
            raise ValueError("max_feedback_latency_s must be positive")


@dataclass(frozen=True)
class TeacherAlignment:
    teacher_id: str
    positive_ratio: float
    cadence_score: float
    latency_score: float
    alignment: float
    peer_percentile: float

    def to_json(self) -> dict:
        return {
            "teacher_id": self.teacher_id,
            "positive_ratio": self.positive_ratio,
            "cadence_score": self.cadence_score,
            "latency_score": self.latency_score,
            "alignment": self.alignment,
            "peer_percentile": self.peer_percentile,
        }


@dataclass(frozen=True)
class SchoolKpi:
    mean_alignment: float
    quality_index: float
    coverage: float
    kpi: float

    def to_json(self) -> dict:
        return {
            "mean_alignment": self.mean_alignment,
            "quality_index": self.quality_index,
            "coverage": self.coverage,
            "kpi": self.kpi,
        }


def alignment_components(
    records: Sequence[BehaviorRecord],
    lessons: Sequence[Lesson],
    taxonomy: BehaviorTaxonomy,
    policy: BestPracticePolicy,
) -> tuple[float, float, float, float]:
    """Return (positive_ratio, cadence_score, latency_score, alignment).

    positive_ratio: share of records with positive valence (1.0 with none).
    cadence_score: mean over lessons of min(1, records / min per lesson);
    0 when lessons exist but carry no records, vacuously 1.0 with no lessons.
    latency_score: share of records captured within the policy's latency
    bound (1.0 with none). Alignment is the plain mean of the three.
    """
    if records:
        positive = sum(
            1
            for r in records
            if (c := taxonomy.category(r.category_code)) is not None and c.valence is Valence.POSITIVE
        )
        positive_ratio = positive / len(records)
        timely = sum(1 for r in records if capture_latency_s(r) <= policy.max_feedback_latency_s)
        latency_score = timely / len(records)
    else:
        positive_ratio = 1.0
        latency_score = 1.0

    if lessons:
        needed = policy.min_records_per_lesson
        per_lesson = []
        for lesson in lessons:
            n = sum(1 for r in records if r.lesson_id == lesson.lesson_id)
            per_lesson.append(1.0 if needed == 0 else min(1.0, n / needed))
        cadence_score = mean(per_lesson)
    else:
        cadence_score = 1.0

    alignment = (positive_ratio + cadence_score + latency_score) / 3.0
    return positive_ratio, cadence_score, latency_score, alignment


def peer_percentile(alignment: float, peer_alignments: Sequence[float]) -> float:
    """Rank among peers scaled to [0, 1]; a lone teacher scores 1.0."""
    n = len(peer_alignments)
    if n <= 1:
        return 1.0
    rank = sum(1 for a in peer_alignments if a < alignment)
    return rank / (n - 1)


def teacher_alignment(
    teacher_id: str,
    records: Sequence[BehaviorRecord],
    lessons: Sequence[Lesson],
    taxonomy: BehaviorTaxonomy,
    policy: BestPracticePolicy,
    peer_alignments: Sequence[float] | None = None,
) -> TeacherAlignment:
    """Score one teacher's records/lessons against the best-practice policy.

    ``peer_alignments`` holds every teacher's alignment (this one included);
    omitted, the teacher is treated as alone and gets percentile 1.0.
    """
    positive_ratio, cadence, latency, alignment = alignment_components(
        records, lessons, taxonomy, policy
    )
    peers = peer_alignments if peer_alignments is not None else [alignment]
    return TeacherAlignment(
        teacher_id=teacher_id,
        positive_ratio=positive_ratio,
        cadence_score=cadence,
        latency_score=latency,
        alignment=alignment,
        peer_percentile=peer_percentile(alignment, peers),
    )


def school_alignments(
    records: Sequence[BehaviorRecord],
    lessons: Sequence[Lesson],
    taxonomy: BehaviorTaxonomy,
    policy: BestPracticePolicy,
) -> dict[str, TeacherAlignment]:
    """Alignment for every teacher with at least one lesson, with percentiles."""
    by_teacher: dict[str, list[Lesson]] = {}
    for lesson in lessons:
        by_teacher.setdefault(lesson.teacher_id, []).append(lesson)

    components = {
        teacher_id: alignment_components(
            [r for r in records if r.teacher_id == teacher_id], teacher_lessons, taxonomy, policy
        )
        for teacher_id, teacher_lessons in sorted(by_teacher.items())
    }
    all_alignments = [c[3] for c in components.values()]
    return {
        teacher_id: TeacherAlignment(
            teacher_id=teacher_id,
            positive_ratio=c[0],
            cadence_score=c[1],
            latency_score=c[2],
            alignment=c[3],
            peer_percentile=peer_percentile(c[3], all_alignments),
        )
        for teacher_id, c in components.items()
    }


def cross_teacher_consistency(
    records: Sequence[BehaviorRecord],
    student_id: str,
    taxonomy: BehaviorTaxonomy,
    window: tuple[datetime | None, datetime | None] | None = None,
) -> list[tuple[str, float]]:
    """Per-category rating agreement for one student across teachers.

    Only categories rated by two or more distinct teachers inside the window
    appear; agreement uses the same dispersion sub-score as the consistency
    quality metric. Categories missing from the taxonomy are skipped.
    """
    start, end = window if window is not None else (None, None)
    by_code: dict[str, list[BehaviorRecord]] = {}
    for r in records:
        if r.student_id != student_id:
            continue
        if start is not None and r.event_ts < start:
            continue
        if end is not None and r.event_ts > end:
            continue
        by_code.setdefault(r.category_code, []).append(r)

    out: list[tuple[str, float]] = []
    for code in sorted(by_code):
        members = by_code[code]
        if len({r.teacher_id for r in members}) < 2:
            continue
        category = taxonomy.category(code)
        if category is None:
            continue
        out.append((code, _agreement([r.rating for r in members], category.half_width)))
    return out


def school_kpi(
    records: Sequence[BehaviorRecord],
    taxonomy: BehaviorTaxonomy,
    roster: set[str],
    lessons: Sequence[Lesson],
    policy: BestPracticePolicy,
    qcfg: QualityConfig | None = None,
) -> SchoolKpi:
    alignments = school_alignments(records, lessons, taxonomy, policy)
    mean_alignment = mean(a.alignment for a in alignments.values()) if alignments else 1.0
    report = quality_report(records, taxonomy, roster, qcfg)
    quality_index = mean(getattr(report, dim) for dim in DIMENSIONS)
    coverage = report.roster_coverage
    return SchoolKpi(
        mean_alignment=mean_alignment,
        quality_index=quality_index,
        coverage=coverage,
        kpi=(mean_alignment + quality_index + coverage) / 3.0,
    )


def week_start(ts: datetime) -> datetime:
    """Midnight UTC of the Monday of ``ts``'s ISO week."""
    ts = ts.astimezone(timezone.utc)
    monday = ts.date() - timedelta(days=ts.weekday())
    return datetime.combine(monday, time(0, 0), tzinfo=timezone.utc)


def weekly_alignment_series(
    teacher_id: str,
    records: Sequence[BehaviorRecord],
    lessons: Sequence[Lesson],
    taxonomy: BehaviorTaxonomy,
    policy: BestPracticePolicy,
) -> list[dict]:
    """Week-bucketed alignment series for one teacher's home graph."""
    own_records = [r for r in records if r.teacher_id == teacher_id]
    own_lessons = [l for l in lessons if l.teacher_id == teacher_id]
    weeks = {week_start(r.event_ts) for r in own_records} | {week_start(l.start) for l in own_lessons}
    series = []
    for wk in sorted(weeks):
        wk_end = wk + timedelta(days=7)
        wk_records = [r for r in own_records if wk <= r.event_ts < wk_end]
        wk_lessons = [l for l in own_lessons if wk <= l.start < wk_end]
        positive_ratio, cadence, latency, alignment = alignment_components(
            wk_records, wk_lessons, taxonomy, policy
        )
        series.append(
            {
                "week_start": wk.date().isoformat(),
                "alignment": alignment,
                "positive_ratio": positive_ratio,
                "cadence_score": cadence,
                "latency_score": latency,
                "n_records": len(wk_records),
            }
        )
    return series


def weekly_kpi_series(
    records: Sequence[BehaviorRecord],
    taxonomy: BehaviorTaxonomy,
    roster: set[str],
    lessons: Sequence[Lesson],
    policy: BestPracticePolicy,
    qcfg: QualityConfig | None = None,
) -> list[dict]:
    """Week-bucketed school KPI series for the second home graph."""
    weeks = {week_start(r.event_ts) for r in records} | {week_start(l.start) for l in lessons}
    series = []
    for wk in sorted(weeks):
        wk_end = wk + timedelta(days=7)
        wk_records = [r for r in records if wk <= r.event_ts < wk_end]
        wk_lessons = [l for l in lessons if wk <= l.start < wk_end]
        kpi = school_kpi(wk_records, taxonomy, roster, wk_lessons, policy, qcfg)
        entry = {"week_start": wk.date().isoformat(), "n_records": len(wk_records)}
        entry.update(kpi.to_json())
        series.append(entry)
    return series
