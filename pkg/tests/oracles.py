"""Naive reference implementations of the four quality dimensions.

Deliberately independent of proxiclass.quality: plain double loops and
hand-rolled statistics, recomputing each score from its definition so the
production metrics have something honest to be checked against.
"""

from __future__ import annotations

import math


def _naive_mean(values) -> float:
    values = list(values)
    return sum(values) / len(values)


def _naive_pstdev(values) -> float:
    values = list(values)
    mu = _naive_mean(values)
    return math.sqrt(sum((v - mu) ** 2 for v in values) / len(values))


def _find_category(taxonomy, code):
    for category in taxonomy.categories:
        if category.code == code:
            return category
    return None


def naive_accuracy(records, taxonomy) -> float:
    if not records:
        return 1.0
    valid = 0
    for r in records:
        category = _find_category(taxonomy, r.category_code)
        if category is None:
            continue
        lo, hi = category.rating_domain
        if r.rating < lo or r.rating > hi:
            continue
        if r.capture_ts < r.event_ts:
            continue
        valid += 1
    return valid / len(records)


def naive_timeliness(records, threshold_s: float) -> tuple[float, float]:
    if not records:
        return 1.0, 0.0
    latencies = [(r.capture_ts - r.event_ts).total_seconds() for r in records]
    timely = 0
    for lat in latencies:
        if lat <= threshold_s:
            timely += 1
    return timely / len(records), _naive_mean(latencies)


def naive_consistency(records, taxonomy, window) -> float:
    # Part (a): rating agreement per (student, category) windowed group.
    agreement_scores = []
    seen_groups = []
    for r in records:
        key = (r.student_id, r.category_code)
        if key in seen_groups:
            continue
        seen_groups.append(key)
        category = _find_category(taxonomy, r.category_code)
        if category is None:
            continue
        members = [m for m in records if m.student_id == key[0] and m.category_code == key[1]]
        first = min(m.event_ts for m in members)
        bucket_indexes = sorted({int((m.event_ts - first) / window) for m in members})
        for idx in bucket_indexes:
            bucket = [m for m in members if int((m.event_ts - first) / window) == idx]
            teachers = set()
            for m in bucket:
                teachers.add(m.teacher_id)
            if len(teachers) < 2:
                continue
            lo, hi = category.rating_domain
            half = (hi - lo) / 2.0
            spread = _naive_pstdev([m.rating for m in bucket])
            if half == 0:
                score = 1.0 if spread == 0 else 0.0
            else:
                score = 1.0 - spread / half
                score = min(1.0, max(0.0, score))
            agreement_scores.append(score)
    agreement = _naive_mean(agreement_scores) if agreement_scores else 1.0

    # Part (b): cadence stability per student over 7-day buckets.
    week_s = 7 * 86400.0
    cadence_scores = []
    students = sorted({r.student_id for r in records})
    for sid in students:
        mine = [r for r in records if r.student_id == sid]
        first = min(r.event_ts for r in mine)
        last = max(r.event_ts for r in mine)
        n_weeks = int((last - first).total_seconds() / week_s) + 1
        if n_weeks < 2:
            continue
        counts = [0] * n_weeks
        for r in mine:
            counts[int((r.event_ts - first).total_seconds() / week_s)] += 1
        cv = _naive_pstdev(counts) / _naive_mean(counts)
        cadence_scores.append(1.0 / (1.0 + cv))
    cadence = _naive_mean(cadence_scores) if cadence_scores else 1.0

    return (agreement + cadence) / 2.0


def naive_completeness(records, roster, required) -> tuple[float, float]:
    if records:
        per_record = []
        for r in records:
            populated = 0
            for attr in required:
                value = getattr(r, attr)
                if value is None:
                    continue
                if isinstance(value, str) and value == "":
                    continue
                populated += 1
            per_record.append(populated / len(required))
        attr_score = _naive_mean(per_record)
    else:
        attr_score = 1.0
    if roster:
        covered = 0
        for sid in roster:
            if any(r.student_id == sid for r in records):
                covered += 1
        coverage = covered / len(roster)
    else:
        coverage = 1.0
    return attr_score, coverage
