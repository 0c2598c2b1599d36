from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from proxiclass.domain import (
    BehaviorRecord,
    BehaviorTaxonomy,
    Category,
    Lesson,
    Student,
    Teacher,
    Valence,
)
from proxiclass.store import SisStore

BASE_TS = datetime(2026, 3, 2, 9, 0, tzinfo=timezone.utc)  # a Monday


def ts(seconds: float = 0.0, days: float = 0.0) -> datetime:
    return BASE_TS + timedelta(seconds=seconds, days=days)


@pytest.fixture
def taxonomy() -> BehaviorTaxonomy:
    return BehaviorTaxonomy(
        categories=(
            Category("RESPECT", "Respectful conduct", Valence.POSITIVE, (1, 3)),
            Category("EFFORT", "Sustained effort", Valence.POSITIVE, (1, 3)),
            Category("DISRUPT", "Disrupting the lesson", Valence.NEGATIVE, (1, 3)),
        )
    )


def make_record(
    record_id: str = "r1",
    student_id: str = "s1",
    teacher_id: str = "t1",
    lesson_id: str = "L1",
    category_code: str = "RESPECT",
    rating: int = 2,
    comment: str | None = "good effort",
    event_s: float = 0.0,
    latency_s: float = 5.0,
    event_ts: datetime | None = None,
    capture_ts: datetime | None = None,
) -> BehaviorRecord:
    event = event_ts if event_ts is not None else ts(event_s)
    capture = capture_ts if capture_ts is not None else event + timedelta(seconds=latency_s)
    return BehaviorRecord(
        record_id=record_id,
        student_id=student_id,
        teacher_id=teacher_id,
        lesson_id=lesson_id,
        category_code=category_code,
        rating=rating,
        comment=comment,
        event_ts=event,
        capture_ts=capture,
    )


@pytest.fixture
def school_store(taxonomy) -> SisStore:
    """In-memory store with a small registered school and no records."""
    store = SisStore()
    store.set_taxonomy(taxonomy)
    for i in range(1, 7):
        store.add_student(Student(student_id=f"s{i}", name=f"Student {i}", year_level=8))
    for i in range(1, 4):
        store.add_teacher(Teacher(teacher_id=f"t{i}", name=f"Teacher {i}"))
    for i in range(1, 4):
        store.add_lesson(
            Lesson(
                lesson_id=f"L{i}",
                teacher_id=f"t{(i - 1) % 3 + 1}",
                roster=frozenset(f"s{j}" for j in range(1, 7)),
                start=ts(days=i - 1),
                end=ts(days=i - 1, seconds=2400),
            )
        )
    return store
