"""Deterministic classroom session simulator.

Generates seeded behavior events over a desk layout and replays them against
two teacher agents: a legacy agent that pays the full manual lookup cost per
record, and a proximity agent that walks to the student, waits for the
nearest-device selection to lock on, and then pays only the short capture
cost. Captured records are written through the store; uncaptured events are
dropped and counted.

The capture budget models the slack a teacher actually has for data entry:
``(1 - teaching_fraction) * duration_s`` seconds per session, consumed in
units of ``steps_per_record * seconds_per_step``. Everything is driven by
seeded generators, so identical configs produce bit-identical outcomes.
"""

from __future__ import annotations

import math
import random
import zlib
from collections import deque
from dataclasses import dataclass, replace
from datetime import datetime, timedelta

from .domain import (
    BehaviorRecord,
    BehaviorTaxonomy,
    Lesson,
    Student,
    Teacher,
    Valence,
    generate_udid,
)
from .proximity import (
    Advertisement,
    PathLossModel,
    ProximitySelection,
    ScannerConfig,
    evict_stale,
    ingest,
    rssi_from_distance,
    select_nearest,
)
from .store import SisStore

AGENT_KINDS = ("legacy", "proximity")

WALK_SPEED_MPS = 1.2
CAPTURE_STANDOFF_M = 0.35
MIN_RADIO_DISTANCE_M = 0.05
SCAN_INTERVAL_S = 1.0
_EPS = 1e-9

_POSITIVE_COMMENTS = (
    "Helped a classmate without prompting",
    "Stayed on task through the whole activity",
    "Asked a thoughtful question",
    "Led the group discussion well",
    "Showed persistence on a hard problem",
)
_NEGATIVE_COMMENTS = (
    "Talked over the teacher",
    "Left seat during instruction",
    "Distracted the back row",
    "Refused to start the set work",
    "Arrived without materials",
)


class SimConfigError(ValueError):
    """A configuration violation detected before any simulation step."""


@dataclass(frozen=True)
class ClassroomLayout:
    width_m: float
    depth_m: float
    desks: tuple[tuple[str, float, float], ...]

    def __post_init__(self) -> None:
        if self.width_m <= 0 or self.depth_m <= 0:
            raise SimConfigError("room dimensions must be positive")
        ids = [sid for sid, _, _ in self.desks]
        if len(set(ids)) != len(ids):
            raise SimConfigError("one desk per student: duplicate student_id in desks")
        for sid, x, y in self.desks:
            if not (0 <= x <= self.width_m and 0 <= y <= self.depth_m):
                raise SimConfigError(f"desk for {sid!r} at ({x}, {y}) is outside the room")

    @classmethod
    def grid(
        cls,
        student_ids: list[str] | tuple[str, ...],
        cols: int = 5,
        spacing_m: float = 1.5,
        margin_m: float = 1.0,
    ) -> "ClassroomLayout":
        """Lay desks out row by row on a regular grid."""
        if cols < 1:
            raise SimConfigError("cols must be at least 1")
        n = len(student_ids)
        rows = max(1, math.ceil(n / cols))
        width = 2 * margin_m + (cols - 1) * spacing_m
        depth = 2 * margin_m + (rows - 1) * spacing_m
        desks = tuple(
            (sid, margin_m + (i % cols) * spacing_m, margin_m + (i // cols) * spacing_m)
            for i, sid in enumerate(student_ids)
        )
        return cls(width_m=width, depth_m=depth, desks=desks)


@dataclass(frozen=True)
class InteractionModel:
    """Discrete user actions needed to capture one record, per flow.

    The legacy flow covers open list, scroll/search, select student, pick
    category, set rating, confirm; the proximity flow keeps only pick
    category and confirm because the student card is already on screen.
    """

    legacy_steps_per_record: int = 6
    proximity_steps_per_record: int = 2
    seconds_per_step: float = 4.0

    def __post_init__(self) -> None:
        if self.proximity_steps_per_record < 1 or self.legacy_steps_per_record < 1:
            raise SimConfigError("steps per record must be at least 1")
        if self.proximity_steps_per_record > self.legacy_steps_per_record:
            raise SimConfigError("proximity flow cannot need more steps than legacy")
        if self.seconds_per_step <= 0:
            raise SimConfigError("seconds_per_step must be positive")

    def steps_for(self, agent_kind: str) -> int:
        if agent_kind == "legacy":
            return self.legacy_steps_per_record
        return self.proximity_steps_per_record


@dataclass(frozen=True)
class SessionConfig:
    duration_s: float = 2400.0
    teaching_fraction: float = 0.85
    event_rate_per_student_per_session: float = 1.5
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise SimConfigError("duration_s must be positive")
        if not 0 <= self.teaching_fraction <= 1:
            raise SimConfigError("teaching_fraction must be in [0, 1]")
        if self.event_rate_per_student_per_session < 0:
            raise SimConfigError("event rate must be non-negative")


@dataclass(frozen=True)
class BehaviorEvent:
    fire_s: float
    student_id: str
    category_code: str
    rating: int
    comment: str


@dataclass(frozen=True)
class SimOutcome:
    agent_kind: str
    records_captured: int
    events_generated: int
    total_interactions: int
    mean_capture_latency_s: float
    dataset: tuple[BehaviorRecord, ...]

    def to_json(self) -> dict:
        return {
            "agent_kind": self.agent_kind,
            "records_captured": self.records_captured,
            "events_generated": self.events_generated,
            "total_interactions": self.total_interactions,
            "mean_capture_latency_s": self.mean_capture_latency_s,
            "dataset": [r.to_json() for r in self.dataset],
        }


@dataclass(frozen=True)
class TermOutcome:
    """Aggregate of a multi-session run plus the per-session series."""

    agent_kind: str
    records_captured: int
    events_generated: int
    total_interactions: int
    mean_capture_latency_s: float
    dataset: tuple[BehaviorRecord, ...]
    sessions: tuple[SimOutcome, ...]

    def to_json(self) -> dict:
        return {
            "agent_kind": self.agent_kind,
            "records_captured": self.records_captured,
            "events_generated": self.events_generated,
            "total_interactions": self.total_interactions,
            "mean_capture_latency_s": self.mean_capture_latency_s,
            "dataset": [r.to_json() for r in self.dataset],
            "sessions": [
                {
                    "records_captured": s.records_captured,
                    "events_generated": s.events_generated,
                    "total_interactions": s.total_interactions,
                    "mean_capture_latency_s": s.mean_capture_latency_s,
                }
                for s in self.sessions
            ],
        }


def _stable_rating(student_id: str, code: str, domain: tuple[int, int]) -> int:
    # Each student exhibits a fixed level per category, so every teacher who
    # rates the same behavior reports the same value.
    lo, hi = domain
    digest = zlib.crc32(f"{student_id}|{code}".encode("utf-8"))
    return lo + digest % (hi - lo + 1)


def _poisson(rng: random.Random, lam: float) -> int:
    if lam <= 0:
        return 0
    threshold = math.exp(-lam)
    n, product = 0, rng.random()
    while product > threshold:
        n += 1
        product *= rng.random()
    return n


def draw_events(
    roster: list[str], taxonomy: BehaviorTaxonomy, session: SessionConfig
) -> list[BehaviorEvent]:
    """Draw the session's behavior events; identical for both agent kinds."""
    rng = random.Random(f"{session.rng_seed}:events")
    positive = [c for c in taxonomy.categories if c.valence is Valence.POSITIVE]
    negative = [c for c in taxonomy.categories if c.valence is Valence.NEGATIVE]
    events: list[BehaviorEvent] = []
    for student_id in sorted(roster):
        for _ in range(_poisson(rng, session.event_rate_per_student_per_session)):
            fire = rng.uniform(0.0, session.duration_s)
            if rng.random() < 0.8 and positive:
                category = rng.choice(positive)
                comment = rng.choice(_POSITIVE_COMMENTS)
            else:
                category = rng.choice(negative)
                comment = rng.choice(_NEGATIVE_COMMENTS)
            events.append(
                BehaviorEvent(
                    fire_s=fire,
                    student_id=student_id,
                    category_code=category.code,
                    rating=_stable_rating(student_id, category.code, category.rating_domain),
                    comment=comment,
                )
            )
    events.sort(key=lambda e: (e.fire_s, e.student_id))
    return events


def _serpentine(layout: ClassroomLayout) -> list[tuple[float, float]]:
    rows: dict[float, list[tuple[float, float]]] = {}
    for _, x, y in layout.desks:
        rows.setdefault(y, []).append((x, y))
    waypoints: list[tuple[float, float]] = []
    for i, y in enumerate(sorted(rows)):
        row = sorted(rows[y], reverse=(i % 2 == 1))
        waypoints.extend(row)
    return waypoints


def _dist(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _step_toward(
    pos: tuple[float, float], target: tuple[float, float], speed: float, stop_at: float
) -> tuple[float, float]:
    d = _dist(pos, target)
    if d <= stop_at:
        return pos
    new_d = max(stop_at, d - speed)
    frac = (d - new_d) / d
    return (pos[0] + (target[0] - pos[0]) * frac, pos[1] + (target[1] - pos[1]) * frac)


def _validate_session(
    store: SisStore,
    lesson: Lesson,
    layout: ClassroomLayout,
    session: SessionConfig,
    agent_kind: str,
) -> None:
    if agent_kind not in AGENT_KINDS:
        raise SimConfigError(f"unknown agent kind {agent_kind!r}")
    if store.taxonomy is None:
        raise SimConfigError("store has no behavior taxonomy")
    if lesson.lesson_id not in store.lessons:
        raise SimConfigError(f"lesson {lesson.lesson_id!r} is not registered in the store")
    desk_ids = {sid for sid, _, _ in layout.desks}
    if desk_ids != set(lesson.roster):
        raise SimConfigError("layout desks do not match the lesson roster")
    span = (lesson.end - lesson.start).total_seconds()
    if abs(span - session.duration_s) > 1e-6:
        raise SimConfigError(
            f"lesson spans {span}s but session duration is {session.duration_s}s"
        )
    if agent_kind == "proximity":
        unregistered = [sid for sid in sorted(lesson.roster) if store.students[sid].udid is None]
        if unregistered:
            raise SimConfigError(f"students without registered devices: {unregistered}")


def run_session(
    store: SisStore,
    lesson: Lesson,
    layout: ClassroomLayout,
    interaction: InteractionModel,
    session: SessionConfig,
    agent_kind: str,
    path_loss: PathLossModel | None = None,
    scanner: ScannerConfig | None = None,
    trace: list[Advertisement] | None = None,
) -> SimOutcome:
    """Simulate one lesson and write captured records through the store.

    ``trace``, when given, collects every synthesized advertisement of a
    proximity run in scan order (the legacy agent does no scanning).
    """
    path_loss = path_loss or PathLossModel()
    scanner = scanner or ScannerConfig()
    _validate_session(store, lesson, layout, session, agent_kind)

    roster = sorted(lesson.roster)
    events = draw_events(roster, store.taxonomy, session)
    cost = interaction.steps_for(agent_kind) * interaction.seconds_per_step
    budget = (1.0 - session.teaching_fraction) * session.duration_s

    if agent_kind == "legacy":
        captures = _run_legacy(events, session.duration_s, cost, budget)
    else:
        captures = _run_proximity(
            store, lesson, layout, session, events, cost, budget, path_loss, scanner, trace
        )

    records: list[BehaviorRecord] = []
    for seq, (event, done_s) in enumerate(captures, start=1):
        record = BehaviorRecord(
            record_id=f"{lesson.lesson_id}-{seq:04d}",
            student_id=event.student_id,
            teacher_id=lesson.teacher_id,
            lesson_id=lesson.lesson_id,
            category_code=event.category_code,
            rating=event.rating,
            comment=event.comment,
            event_ts=lesson.start + timedelta(seconds=event.fire_s),
            capture_ts=lesson.start + timedelta(seconds=done_s),
        )
        store.write_record(record)
        records.append(record)

    latencies = [(r.capture_ts - r.event_ts).total_seconds() for r in records]
    return SimOutcome(
        agent_kind=agent_kind,
        records_captured=len(records),
        events_generated=len(events),
        total_interactions=len(records) * interaction.steps_for(agent_kind),
        mean_capture_latency_s=sum(latencies) / len(latencies) if latencies else 0.0,
        dataset=tuple(records),
    )


def _run_legacy(
    events: list[BehaviorEvent], duration_s: float, cost: float, budget: float
) -> list[tuple[BehaviorEvent, float]]:
    captures: list[tuple[BehaviorEvent, float]] = []
    free_at = 0.0
    for event in events:
        if budget + _EPS < cost:
            continue  # budget exhausted: the behavior simply goes unrecorded
        start = max(event.fire_s, free_at)
        done = start + cost
        if done > duration_s + _EPS:
            continue  # cannot finish before the bell
        budget -= cost
        free_at = done
        captures.append((event, done))
    return captures


def _run_proximity(
    store: SisStore,
    lesson: Lesson,
    layout: ClassroomLayout,
    session: SessionConfig,
    events: list[BehaviorEvent],
    cost: float,
    budget: float,
    path_loss: PathLossModel,
    scanner: ScannerConfig,
    trace: list[Advertisement] | None,
) -> list[tuple[BehaviorEvent, float]]:
    roster = sorted(lesson.roster)
    udid_of = {sid: store.students[sid].udid for sid in roster}
    desk_of = {sid: (x, y) for sid, x, y in layout.desks}
    waypoints = _serpentine(layout)
    noise = random.Random(f"{session.rng_seed}:noise")

    pos = waypoints[0]
    wp_i = 1 % len(waypoints)
    tracks: dict = {}
    sel = ProximitySelection()
    pending: deque[BehaviorEvent] = deque()
    ev_i = 0
    state = "patrol"
    active: BehaviorEvent | None = None
    capture_done = 0.0
    captures: list[tuple[BehaviorEvent, float]] = []

    for tick in range(int(math.ceil(session.duration_s)) + 1):
        t = float(tick) * SCAN_INTERVAL_S
        while ev_i < len(events) and events[ev_i].fire_s <= t:
            pending.append(events[ev_i])
            ev_i += 1

        if state == "patrol":
            while pending:
                event = pending.popleft()
                if budget + _EPS < cost:
                    continue  # dropped: budget exhausted
                active = event
                state = "approach"
                break

        if state == "patrol":
            pos = _step_toward(pos, waypoints[wp_i], WALK_SPEED_MPS * SCAN_INTERVAL_S, 0.0)
            if _dist(pos, waypoints[wp_i]) < 0.05:
                wp_i = (wp_i + 1) % len(waypoints)
        elif state == "approach":
            pos = _step_toward(
                pos, desk_of[active.student_id], WALK_SPEED_MPS * SCAN_INTERVAL_S, CAPTURE_STANDOFF_M
            )

        now = lesson.start + timedelta(seconds=t)
        for sid in roster:
            distance = max(_dist(pos, desk_of[sid]), MIN_RADIO_DISTANCE_M)
            adv = Advertisement(
                udid=udid_of[sid],
                rssi_dbm=rssi_from_distance(path_loss, distance, noise.gauss(0.0, 1.0)),
                ts=now,
            )
            tracks = ingest(tracks, adv, scanner)
            if trace is not None:
                trace.append(adv)
        tracks = evict_stale(tracks, now, scanner)
        sel = select_nearest(sel, tracks, scanner)

        if state == "approach":
            at_desk = _dist(pos, desk_of[active.student_id]) <= CAPTURE_STANDOFF_M + 1e-6
            if at_desk and sel.current == udid_of[active.student_id]:
                if t + cost <= session.duration_s + _EPS:
                    state = "capture"
                    capture_done = t + cost
                else:
                    active = None  # dropped: cannot finish before the bell
                    state = "patrol"
        elif state == "capture" and t + _EPS >= capture_done:
            budget -= cost
            captures.append((active, capture_done))
            active = None
            state = "patrol"

    return captures


@dataclass(frozen=True)
class TermConfig:
    layout: ClassroomLayout
    taxonomy: BehaviorTaxonomy
    interaction: InteractionModel
    session: SessionConfig
    path_loss: PathLossModel
    scanner: ScannerConfig
    start: datetime
    n_teachers: int = 7

    def __post_init__(self) -> None:
        if self.n_teachers < 1:
            raise SimConfigError("n_teachers must be at least 1")


def build_term_store(cfg: TermConfig, n_sessions: int) -> tuple[SisStore, list[Lesson]]:
    """Register the school a term needs: students with devices, a rotating
    teacher pool, and one lesson per session on consecutive days."""
    store = SisStore()
    store.set_taxonomy(cfg.taxonomy)
    student_ids = [sid for sid, _, _ in cfg.layout.desks]
    udid_rng = random.Random(f"{cfg.session.rng_seed}:udids")
    for i, sid in enumerate(sorted(student_ids)):
        store.add_student(Student(student_id=sid, name=f"Student {i + 1:02d}", year_level=7))
        store.register_device(generate_udid(udid_rng.getrandbits(63)), sid)
    for i in range(cfg.n_teachers):
        store.add_teacher(Teacher(teacher_id=f"t{i + 1:02d}", name=f"Teacher {i + 1:02d}"))
    lessons = []
    for i in range(n_sessions):
        start = cfg.start + timedelta(days=i)
        lesson = Lesson(
            lesson_id=f"L{i + 1:03d}",
            teacher_id=f"t{i % cfg.n_teachers + 1:02d}",
            roster=frozenset(student_ids),
            start=start,
            end=start + timedelta(seconds=cfg.session.duration_s),
        )
        store.add_lesson(lesson)
        lessons.append(lesson)
    return store, lessons


def run_term(
    n_sessions: int,
    cfg: TermConfig,
    agent_kind: str,
    store: SisStore | None = None,
    lessons: list[Lesson] | None = None,
    trace: list[Advertisement] | None = None,
) -> TermOutcome:
    """Run ``n_sessions`` seeded sessions and aggregate their outcomes.

    Per-session seeds are derived deterministically from the base seed, so a
    term is reproducible end to end and different base seeds diverge.
    """
    if n_sessions < 1:
        raise SimConfigError("n_sessions must be at least 1")
    if store is None:
        store, lessons = build_term_store(cfg, n_sessions)
    if lessons is None or len(lessons) < n_sessions:
        raise SimConfigError("run_term needs one registered lesson per session")

    seed_rng = random.Random(f"{cfg.session.rng_seed}:term")
    session_seeds = [seed_rng.getrandbits(63) for _ in range(n_sessions)]

    outcomes: list[SimOutcome] = []
    for i in range(n_sessions):
        outcomes.append(
            run_session(
                store=store,
                lesson=lessons[i],
                layout=cfg.layout,
                interaction=cfg.interaction,
                session=replace(cfg.session, rng_seed=session_seeds[i]),
                agent_kind=agent_kind,
                path_loss=cfg.path_loss,
                scanner=cfg.scanner,
                trace=trace,
            )
        )

    dataset = tuple(r for o in outcomes for r in o.dataset)
    total_records = sum(o.records_captured for o in outcomes)
    total_latency = sum(o.mean_capture_latency_s * o.records_captured for o in outcomes)
    return TermOutcome(
        agent_kind=agent_kind,
        records_captured=total_records,
        events_generated=sum(o.events_generated for o in outcomes),
        total_interactions=sum(o.total_interactions for o in outcomes),
        mean_capture_latency_s=total_latency / total_records if total_records else 0.0,
        dataset=dataset,
        sessions=tuple(outcomes),
    )


@dataclass(frozen=True)
class DefectRates:
    """Per-record defect injection probabilities for legacy-style data."""

    missing_comment: float = 0.3
    invalid_code: float = 0.2
    late_capture: float = 0.4

    def __post_init__(self) -> None:
        for name in ("missing_comment", "invalid_code", "late_capture"):
            p = getattr(self, name)
            if not 0 <= p <= 1:
                raise SimConfigError(f"{name} must be a probability, got {p}")


DEFAULT_DEFECT_RATES = DefectRates()

UNCODED = "UNCODED"  # stand-in category for corrupted codes; keep it out of taxonomies

LATE_CAPTURE_MIN_S = 600.0
LATE_CAPTURE_MAX_S = 86400.0


def degrade_dataset(
    records: list[BehaviorRecord] | tuple[BehaviorRecord, ...],
    rates: DefectRates = DEFAULT_DEFECT_RATES,
    seed: int = 0,
) -> list[BehaviorRecord]:
    """Inject seeded per-record defects, producing a legacy-quality dataset.

    Each record independently loses its comment, has its category corrupted
    to an out-of-schema code, and/or has its capture pushed 10 minutes to a
    day late. Record count and ordering are preserved.
    """
    rng = random.Random(f"{seed}:degrade")
    out: list[BehaviorRecord] = []
    for record in records:
        drop_comment = rng.random() < rates.missing_comment
        corrupt_code = rng.random() < rates.invalid_code
        late = rng.random() < rates.late_capture
        delay = rng.uniform(LATE_CAPTURE_MIN_S, LATE_CAPTURE_MAX_S)
        if not (drop_comment or corrupt_code or late):
            out.append(record)
            continue
        out.append(
            replace(
                record,
                comment=None if drop_comment else record.comment,
                category_code=UNCODED if corrupt_code else record.category_code,
                capture_ts=record.capture_ts + timedelta(seconds=delay) if late else record.capture_ts,
            )
        )
    return out
