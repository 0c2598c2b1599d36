"""Shared domain vocabulary: students, teachers, behavior taxonomy, lessons,
and the behavior records whose quality the rest of the system measures.

All types are immutable values. Behavior records deliberately accept invalid
category codes, out-of-domain ratings, and inverted timestamps: dirty data
must be representable so it can be stored and scored, not rejected at the
door. ``validate_record`` classifies a record instead of raising.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum

UDID_RE = re.compile(r"^[0-9a-f]{32}$")

Udid = str


def generate_udid(rng_seed: int) -> Udid:
    """Generate a 32-char lowercase-hex device identifier from a seed.

    Deterministic: the same seed always yields the same identifier.
    """
    return format(random.Random(rng_seed).getrandbits(128), "032x")


def is_udid(value: str) -> bool:
    return bool(UDID_RE.match(value))


def to_rfc3339(ts: datetime) -> str:
    """Format an aware datetime as an RFC 3339 string (UTC offset form)."""
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).isoformat()


def parse_rfc3339(text: str) -> datetime:
    """Parse an RFC 3339 timestamp, accepting both 'Z' and numeric offsets."""
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


class Valence(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class Category:
    code: str
    label: str
    valence: Valence
    rating_domain: tuple[int, int] = (1, 3)

    def __post_init__(self) -> None:
        lo, hi = self.rating_domain
        if lo > hi:
            raise ValueError(f"empty rating_domain {self.rating_domain!r} for {self.code}")

    @property
    def half_width(self) -> float:
        lo, hi = self.rating_domain
        return (hi - lo) / 2.0


@dataclass(frozen=True)
class BehaviorTaxonomy:
    categories: tuple[Category, ...]

    def __post_init__(self) -> None:
        codes = [c.code for c in self.categories]
        if len(set(codes)) != len(codes):
            raise ValueError("duplicate category codes in taxonomy")
        valences = {c.valence for c in self.categories}
        if valences != {Valence.POSITIVE, Valence.NEGATIVE}:
            raise ValueError("taxonomy needs at least one positive and one negative category")

    def category(self, code: str) -> Category | None:
        for c in self.categories:
            if c.code == code:
                return c
        return None

    def to_json(self) -> dict:
        return {
            "categories": [
                {
                    "code": c.code,
                    "label": c.label,
                    "valence": c.valence.value,
                    "rating_domain": list(c.rating_domain),
                }
                for c in self.categories
            ]
        }

    @classmethod
    def from_json(cls, data: dict) -> "BehaviorTaxonomy":
        return cls(
            categories=tuple(
                Category(
                    code=c["code"],
                    label=c["label"],
                    valence=Valence(c["valence"]),
                    rating_domain=(int(c["rating_domain"][0]), int(c["rating_domain"][1])),
                )
                for c in data["categories"]
            )
        )


@dataclass(frozen=True)
class Student:
    student_id: str
    name: str
    year_level: int
    udid: Udid | None = None

    def __post_init__(self) -> None:
        if not 5 <= self.year_level <= 12:
            raise ValueError(f"year_level {self.year_level} outside 5..12")

    def to_json(self) -> dict:
        return {
            "student_id": self.student_id,
            "name": self.name,
            "year_level": self.year_level,
            "udid": self.udid,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Student":
        return cls(
            student_id=data["student_id"],
            name=data["name"],
            year_level=int(data["year_level"]),
            udid=data.get("udid"),
        )


@dataclass(frozen=True)
class Teacher:
    teacher_id: str
    name: str

    def to_json(self) -> dict:
        return {"teacher_id": self.teacher_id, "name": self.name}

    @classmethod
    def from_json(cls, data: dict) -> "Teacher":
        return cls(teacher_id=data["teacher_id"], name=data["name"])


@dataclass(frozen=True)
class Lesson:
    lesson_id: str
    teacher_id: str
    roster: frozenset[str]
    start: datetime
    end: datetime

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ValueError("lesson start must precede end")
        if not self.roster:
            raise ValueError("lesson roster is empty")

    def to_json(self) -> dict:
        return {
            "lesson_id": self.lesson_id,
            "teacher_id": self.teacher_id,
            "roster": sorted(self.roster),
            "start": to_rfc3339(self.start),
            "end": to_rfc3339(self.end),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Lesson":
        return cls(
            lesson_id=data["lesson_id"],
            teacher_id=data["teacher_id"],
            roster=frozenset(data["roster"]),
            start=parse_rfc3339(data["start"]),
            end=parse_rfc3339(data["end"]),
        )


@dataclass(frozen=True)
class BehaviorRecord:
    """One teacher appraisal of one student behavior at a moment in time.

    ``event_ts`` is when the behavior occurred; ``capture_ts`` is when the
    record reached the data store. Neither field ordering nor category/rating
    validity is enforced here (see module docstring).
    """

    record_id: str
    student_id: str
    teacher_id: str
    lesson_id: str
    category_code: str
    rating: int
    event_ts: datetime
    capture_ts: datetime
    comment: str | None = None

    def to_json(self) -> dict:
        return {
            "record_id": self.record_id,
            "student_id": self.student_id,
            "teacher_id": self.teacher_id,
            "lesson_id": self.lesson_id,
            "category_code": self.category_code,
            "rating": self.rating,
            "comment": self.comment,
            "event_ts": to_rfc3339(self.event_ts),
            "capture_ts": to_rfc3339(self.capture_ts),
        }

    @classmethod
    def from_json(cls, data: dict) -> "BehaviorRecord":
        return cls(
            record_id=data["record_id"],
            student_id=data["student_id"],
            teacher_id=data["teacher_id"],
            lesson_id=data["lesson_id"],
            category_code=data["category_code"],
            rating=int(data["rating"]),
            comment=data.get("comment"),
            event_ts=parse_rfc3339(data["event_ts"]),
            capture_ts=parse_rfc3339(data["capture_ts"]),
        )


class ValidationOutcome(str, Enum):
    VALID = "valid"
    UNKNOWN_CATEGORY = "unknown_category"
    RATING_OUT_OF_DOMAIN = "rating_out_of_domain"
    TIMESTAMP_INVERTED = "timestamp_inverted"


def validate_record(record: BehaviorRecord, taxonomy: BehaviorTaxonomy) -> ValidationOutcome:
    """Classify a record against the taxonomy.

    Checks run in a fixed order (category, rating, timestamps) and the first
    failure is reported, so outcomes are deterministic for mixed defects.
    """
    category = taxonomy.category(record.category_code)
    if category is None:
        return ValidationOutcome.UNKNOWN_CATEGORY
    lo, hi = category.rating_domain
    if not lo <= record.rating <= hi:
        return ValidationOutcome.RATING_OUT_OF_DOMAIN
    if record.capture_ts < record.event_ts:
        return ValidationOutcome.TIMESTAMP_INVERTED
    return ValidationOutcome.VALID
