"""Four-dimension data-quality scoring for behavior record sets.

Scores accuracy (conformance to the behavior taxonomy), timeliness (capture
latency against a threshold), consistency (cross-teacher rating agreement
plus per-student cadence stability), and completeness (required attributes
populated, roster coverage). Every score lives in [0, 1] and two datasets'
reports can be compared for per-dimension deltas and dominance.

Empty-set conventions: accuracy, timeliness, and consistency are vacuously
1.0 on no records; roster coverage is 0.0 when students exist but carry no
data, because the absence of required data is itself incompleteness.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from datetime import timedelta
from statistics import mean, pstdev
from typing import Sequence

from .domain import BehaviorRecord, BehaviorTaxonomy, ValidationOutcome, validate_record

_RECORD_FIELDS = {f.name for f in dataclasses.fields(BehaviorRecord)}

CADENCE_BUCKET = timedelta(days=7)

DIMENSIONS = ("accuracy", "timeliness", "consistency", "completeness")


@dataclass(frozen=True)
class QualityConfig:
    timeliness_threshold_s: float = 300.0
    required_attributes: tuple[str, ...] = ("category_code", "rating", "lesson_id", "comment")
    consistency_window: timedelta = timedelta(days=7)

    def __post_init__(self) -> None:
        if self.timeliness_threshold_s <= 0:
            raise ValueError("timeliness_threshold_s must be positive")
        if not self.required_attributes:
            raise ValueError("required_attributes must be non-empty")
        unknown = set(self.required_attributes) - _RECORD_FIELDS
        if unknown:
            raise ValueError(f"required_attributes not record fields: {sorted(unknown)}")
        if self.consistency_window <= timedelta(0):
            raise ValueError("consistency_window must be positive")


@dataclass(frozen=True)
class QualityReport:
    accuracy: float
    timeliness: float
    mean_capture_latency_s: float
    consistency: float
    completeness: float
    roster_coverage: float
    n_records: int

    def to_json(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "timeliness": self.timeliness,
            "mean_capture_latency_s": self.mean_capture_latency_s,
            "consistency": self.consistency,
            "completeness": self.completeness,
            "roster_coverage": self.roster_coverage,
            "n_records": self.n_records,
        }

    @classmethod
    def from_json(cls, data: dict) -> "QualityReport":
        return cls(
            accuracy=float(data["accuracy"]),
            timeliness=float(data["timeliness"]),
            mean_capture_latency_s=float(data["mean_capture_latency_s"]),
            consistency=float(data["consistency"]),
            completeness=float(data["completeness"]),
            roster_coverage=float(data["roster_coverage"]),
            n_records=int(data["n_records"]),
        )


def accuracy(records: Sequence[BehaviorRecord], taxonomy: BehaviorTaxonomy) -> float:
    """Fraction of records fully valid against the taxonomy (empty set: 1.0)."""
    if not records:
        return 1.0
    valid = sum(1 for r in records if validate_record(r, taxonomy) is ValidationOutcome.VALID)
    return valid / len(records)


def capture_latency_s(record: BehaviorRecord) -> float:
    return (record.capture_ts - record.event_ts).total_seconds()


def timeliness(records: Sequence[BehaviorRecord], cfg: QualityConfig) -> tuple[float, float]:
    """Return (score, mean latency). Score counts latency <= threshold, inclusive."""
    if not records:
        return 1.0, 0.0
    latencies = [capture_latency_s(r) for r in records]
    timely = sum(1 for lat in latencies if lat <= cfg.timeliness_threshold_s)
    return timely / len(records), mean(latencies)


def _clamp01(x: float) -> float:
    return max(0.0, min(1.0, x))


def _agreement(ratings: Sequence[int], half_width: float) -> float:
    spread = pstdev(ratings)
    if half_width == 0:
        return 1.0 if spread == 0 else 0.0
    return _clamp01(1.0 - spread / half_width)


def rating_agreement(
    records: Sequence[BehaviorRecord], taxonomy: BehaviorTaxonomy, cfg: QualityConfig
) -> float:
    """Sub-score (a) of consistency: rating agreement across teachers.

    Records are grouped by (student, category); each group is partitioned
    into consecutive windows of ``consistency_window`` anchored at the
    group's earliest event. Windows rated by >= 2 distinct teachers score
    1 - pstdev(ratings)/half_width of the category's rating domain, clamped
    to [0, 1]. Categories absent from the taxonomy have no domain and are
    skipped. No eligible window: vacuously 1.0.
    """
    groups: dict[tuple[str, str], list[BehaviorRecord]] = {}
    for r in records:
        groups.setdefault((r.student_id, r.category_code), []).append(r)

    scores: list[float] = []
    for (_, code), members in sorted(groups.items()):
        category = taxonomy.category(code)
        if category is None:
            continue
        members.sort(key=lambda r: (r.event_ts, r.record_id))
        first = members[0].event_ts
        windows: dict[int, list[BehaviorRecord]] = {}
        for r in members:
            idx = int((r.event_ts - first) / cfg.consistency_window)
            windows.setdefault(idx, []).append(r)
        for idx in sorted(windows):
            bucket = windows[idx]
            if len({r.teacher_id for r in bucket}) < 2:
                continue
            scores.append(_agreement([r.rating for r in bucket], category.half_width))
    return mean(scores) if scores else 1.0


def cadence_stability(records: Sequence[BehaviorRecord]) -> float:
    """Sub-score (b) of consistency: stability of per-student weekly counts.

    For each student, records are counted into 7-day buckets spanning their
    first to last event; students covering >= 2 buckets score
    1 / (1 + coefficient of variation of the counts). Fewer than two weeks
    of data excludes the student; no eligible student: vacuously 1.0.
    """
    per_student: dict[str, list[BehaviorRecord]] = {}
    for r in records:
        per_student.setdefault(r.student_id, []).append(r)

    scores: list[float] = []
    for _, members in sorted(per_student.items()):
        first = min(r.event_ts for r in members)
        last = max(r.event_ts for r in members)
        n_weeks = int((last - first) / CADENCE_BUCKET) + 1
        if n_weeks < 2:
            continue
        counts = [0] * n_weeks
        for r in members:
            counts[int((r.event_ts - first) / CADENCE_BUCKET)] += 1
        avg = mean(counts)
        cv = pstdev(counts) / avg
        scores.append(1.0 / (1.0 + cv))
    return mean(scores) if scores else 1.0


def consistency(
    records: Sequence[BehaviorRecord], taxonomy: BehaviorTaxonomy, cfg: QualityConfig
) -> float:
    """Mean of rating agreement and cadence stability."""
    return (rating_agreement(records, taxonomy, cfg) + cadence_stability(records)) / 2.0


def _populated(record: BehaviorRecord, attr: str) -> bool:
    value = getattr(record, attr)
    if value is None:
        return False
    if isinstance(value, str):
        return value != ""
    return True


def completeness(
    records: Sequence[BehaviorRecord], roster: set[str], cfg: QualityConfig
) -> tuple[float, float]:
    """Return (attribute score, roster coverage).

    Attribute score averages, per record, the fraction of required
    attributes that are present and non-empty. Coverage is the fraction of
    roster students with at least one record; an empty record set against a
    non-empty roster scores 0.0 coverage.
    """
    if records:
        n_required = len(cfg.required_attributes)
        attr_score = mean(
            sum(1 for a in cfg.required_attributes if _populated(r, a)) / n_required
            for r in records
        )
    else:
        attr_score = 1.0

    if roster:
        covered = {r.student_id for r in records} & roster
        coverage = len(covered) / len(roster)
    else:
        coverage = 1.0
    return attr_score, coverage


def quality_report(
    records: Sequence[BehaviorRecord],
    taxonomy: BehaviorTaxonomy,
    roster: set[str],
    cfg: QualityConfig | None = None,
) -> QualityReport:
    cfg = cfg or QualityConfig()
    timeliness_score, mean_latency = timeliness(records, cfg)
    attr_score, coverage = completeness(records, roster, cfg)
    return QualityReport(
        accuracy=accuracy(records, taxonomy),
        timeliness=timeliness_score,
        mean_capture_latency_s=mean_latency,
        consistency=consistency(records, taxonomy, cfg),
        completeness=attr_score,
        roster_coverage=coverage,
        n_records=len(records),
    )


@dataclass(frozen=True)
class QualityComparison:
    deltas: dict[str, float]
    dominates: bool

    def to_json(self) -> dict:
        return {"deltas": dict(self.deltas), "dominates": self.dominates}


def compare(report_legacy: QualityReport, report_new: QualityReport) -> QualityComparison:
    """Per-dimension deltas (new - legacy) plus a dominance flag.

    Dominance is inclusive: the new report must be >= the legacy one on all
    four dimensions, so equal scores do not break it.
    """
    deltas = {
        dim: getattr(report_new, dim) - getattr(report_legacy, dim) for dim in DIMENSIONS
    }
    dominates = all(getattr(report_new, dim) >= getattr(report_legacy, dim) for dim in DIMENSIONS)
    return QualityComparison(deltas=deltas, dominates=dominates)
