"""Student information store: entities, device bindings, behavior records.

Backed by an append-only JSON-lines journal; the full in-memory state is
rebuilt by replaying the journal on load, so the store file is durable,
diffable, and inspectable line by line. Writes are serialized through one
lock; readers always see a state no older than the last completed write.

Records are persisted regardless of their validation outcome — the point of
the quality pipeline is to measure dirty data, not to refuse it — but
referential integrity (student/teacher/lesson existence, unique record ids,
injective device bindings) is enforced.
"""

from __future__ import annotations

import dataclasses
import json
import threading
from datetime import datetime
from pathlib import Path
from typing import Callable

from .domain import (
    BehaviorRecord,
    BehaviorTaxonomy,
    Lesson,
    Student,
    Teacher,
    Udid,
    ValidationOutcome,
    is_udid,
    validate_record,
)

DEFAULT_RECENT_K = 10


class SisError(Exception):
    """Operation-level failure with a wire-mappable code."""

    def __init__(self, code: str, detail: str):
        super().__init__(detail)
        self.code = code
        self.detail = detail

    @classmethod
    def not_found(cls, detail: str) -> "SisError":
        return cls("not_found", detail)

    @classmethod
    def conflict(cls, detail: str) -> "SisError":
        return cls("conflict", detail)

    @classmethod
    def malformed(cls, detail: str) -> "SisError":
        return cls("malformed", detail)


class StoreCorruptError(Exception):
    """Raised when a journal line cannot be parsed or applied."""

    def __init__(self, path: str, lineno: int, detail: str):
        super().__init__(f"{path}: line {lineno}: {detail}")
        self.path = path
        self.lineno = lineno
        self.detail = detail


class SisStore:
    def __init__(self, journal_path: str | Path | None = None):
        self.students: dict[str, Student] = {}
        self.teachers: dict[str, Teacher] = {}
        self.taxonomy: BehaviorTaxonomy | None = None
        self.lessons: dict[str, Lesson] = {}
        self.records: dict[str, BehaviorRecord] = {}
        self.udid_index: dict[Udid, str] = {}
        self._lock = threading.RLock()
        self._journal_path = Path(journal_path) if journal_path is not None else None

    # -- loading ---------------------------------------------------------

    @classmethod
    def load(cls, path: str | Path) -> "SisStore":
        """Rebuild a store by replaying its journal, then keep appending to it.

        A missing file yields an empty store; a line that fails to parse or
        apply raises StoreCorruptError naming the offending line.
        """
        store = cls()
        path = Path(path)
        if path.exists():
            with open(path, "r", encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        event = json.loads(line)
                    except json.JSONDecodeError as exc:
                        raise StoreCorruptError(str(path), lineno, f"invalid JSON ({exc.msg})") from exc
                    try:
                        store._apply(event)
                    except (SisError, KeyError, ValueError, TypeError) as exc:
                        raise StoreCorruptError(str(path), lineno, str(exc)) from exc
        store._journal_path = path
        return store

    def _append(self, event: dict) -> None:
        if self._journal_path is None:
            return
        self._journal_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self._journal_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True))
            fh.write("\n")

    def _apply(self, event: dict) -> None:
        handlers: dict[str, Callable[[dict], None]] = {
            "student": lambda e: self._put_student(Student.from_json(e)),
            "teacher": lambda e: self._put_teacher(Teacher.from_json(e)),
            "taxonomy": lambda e: self._put_taxonomy(BehaviorTaxonomy.from_json(e)),
            "lesson": lambda e: self._put_lesson(Lesson.from_json(e)),
            "device": lambda e: self._bind_device(e["udid"], e["student_id"]),
            "record": lambda e: self._put_record(BehaviorRecord.from_json(e)),
        }
        kind = event.get("type")
        if kind not in handlers:
            raise ValueError(f"unknown event type {kind!r}")
        handlers[kind](event)

    # -- entity registration ---------------------------------------------

    def _put_student(self, student: Student) -> None:
        self.students[student.student_id] = student
        if student.udid is not None:
            self.udid_index[student.udid] = student.student_id

    def _put_teacher(self, teacher: Teacher) -> None:
        self.teachers[teacher.teacher_id] = teacher

    def _put_taxonomy(self, taxonomy: BehaviorTaxonomy) -> None:
        self.taxonomy = taxonomy

    def _put_lesson(self, lesson: Lesson) -> None:
        missing = lesson.roster - self.students.keys()
        if missing:
            raise SisError.not_found(f"lesson roster references unknown students: {sorted(missing)}")
        if lesson.teacher_id not in self.teachers:
            raise SisError.not_found(f"unknown teacher {lesson.teacher_id!r}")
        self.lessons[lesson.lesson_id] = lesson

    def add_student(self, student: Student) -> None:
        with self._lock:
            self._put_student(student)
            self._append({"type": "student", **student.to_json()})

    def add_teacher(self, teacher: Teacher) -> None:
        with self._lock:
            self._put_teacher(teacher)
            self._append({"type": "teacher", **teacher.to_json()})

    def set_taxonomy(self, taxonomy: BehaviorTaxonomy) -> None:
        with self._lock:
            self._put_taxonomy(taxonomy)
            self._append({"type": "taxonomy", **taxonomy.to_json()})

    def add_lesson(self, lesson: Lesson) -> None:
        with self._lock:
            self._put_lesson(lesson)
            self._append({"type": "lesson", **lesson.to_json()})

    # -- device registration ----------------------------------------------

    def _bind_device(self, udid: Udid, student_id: str) -> bool:
        if not is_udid(udid):
            raise SisError.malformed(f"udid {udid!r} is not 32 lowercase hex characters")
        student = self.students.get(student_id)
        if student is None:
            raise SisError.not_found(f"unknown student {student_id!r}")
        bound_to = self.udid_index.get(udid)
        if bound_to is not None and bound_to != student_id:
            raise SisError.conflict(f"udid already registered to student {bound_to!r}")
        if student.udid is not None and student.udid != udid:
            raise SisError.conflict(f"student {student_id!r} already has device {student.udid!r}")
        if bound_to == student_id:
            return False  # idempotent re-registration
        self.udid_index[udid] = student_id
        self.students[student_id] = dataclasses.replace(student, udid=udid)
        return True

    def register_device(self, udid: Udid, student_id: str) -> None:
        with self._lock:
            changed = self._bind_device(udid, student_id)
            if changed:
                self._append({"type": "device", "udid": udid, "student_id": student_id})

    # -- records -----------------------------------------------------------

    def _put_record(self, record: BehaviorRecord) -> None:
        if record.record_id in self.records:
            raise SisError.conflict(f"duplicate record_id {record.record_id!r}")
        if record.student_id not in self.students:
            raise SisError.not_found(f"unknown student {record.student_id!r}")
        if record.teacher_id not in self.teachers:
            raise SisError.not_found(f"unknown teacher {record.teacher_id!r}")
        if record.lesson_id not in self.lessons:
            raise SisError.not_found(f"unknown lesson {record.lesson_id!r}")
        self.records[record.record_id] = record

    def write_record(self, record: BehaviorRecord) -> ValidationOutcome:
        """Persist a record and return its validation outcome.

        The record is stored whatever the outcome; the outcome is immediate
        quality feedback for the writer, not an admission check.
        """
        with self._lock:
            self._put_record(record)
            self._append({"type": "record", **record.to_json()})
            if self.taxonomy is None:
                return ValidationOutcome.UNKNOWN_CATEGORY
            return validate_record(record, self.taxonomy)

    def lookup_by_udid(self, udid: Udid, k: int = DEFAULT_RECENT_K) -> tuple[Student, list[BehaviorRecord]]:
        """Resolve a device to its student plus their k most recent records.

        Recency is capture_ts descending; equal timestamps fall back to
        record_id ascending so the order is deterministic.
        """
        with self._lock:
            student_id = self.udid_index.get(udid)
            if student_id is None:
                raise SisError.not_found(f"no student registered for udid {udid!r}")
            student = self.students[student_id]
            recs = sorted(
                (r for r in self.records.values() if r.student_id == student_id),
                key=lambda r: r.record_id,
            )
            recs.sort(key=lambda r: r.capture_ts, reverse=True)
            return student, recs[:k]

    def query_records(
        self,
        student_id: str | None = None,
        teacher_id: str | None = None,
        lesson_id: str | None = None,
        time_range: tuple[datetime | None, datetime | None] | None = None,
    ) -> list[BehaviorRecord]:
        """All records matching every supplied filter, by (capture_ts, record_id).

        The time range bounds event_ts inclusively, so late-captured records
        still belong to the period in which the behavior occurred.
        """
        if time_range is not None:
            start, end = time_range
            if start is not None and end is not None and start > end:
                raise SisError.malformed("inverted time range: from is after to")
        with self._lock:
            out = []
            for r in self.records.values():
                if student_id is not None and r.student_id != student_id:
                    continue
                if teacher_id is not None and r.teacher_id != teacher_id:
                    continue
                if lesson_id is not None and r.lesson_id != lesson_id:
                    continue
                if time_range is not None:
                    start, end = time_range
                    if start is not None and r.event_ts < start:
                        continue
                    if end is not None and r.event_ts > end:
                        continue
                out.append(r)
            out.sort(key=lambda r: (r.capture_ts, r.record_id))
            return out

    def roster_ids(self) -> set[str]:
        with self._lock:
            return set(self.students)
