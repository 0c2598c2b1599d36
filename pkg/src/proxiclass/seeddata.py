"""Demo school generator: instant content for the live console.

Builds a school-sized teacher body, one device-registered class, a fortnight
of weekday lessons, and populates the store by actually running proximity
sessions, so every record in the demo store went through the same capture
path as production data.
"""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone

from .domain import BehaviorTaxonomy, Category, Lesson, Student, Teacher, Valence, generate_udid
from .sim import ClassroomLayout, InteractionModel, SessionConfig, run_session
from .proximity import PathLossModel, ScannerConfig
from .store import SisStore

DEFAULT_TAXONOMY = BehaviorTaxonomy(
    categories=(
        Category("RESPECT", "Respectful to staff and peers", Valence.POSITIVE),
        Category("EFFORT", "Sustained effort on task", Valence.POSITIVE),
        Category("TEAMWORK", "Works well with others", Valence.POSITIVE),
        Category("LEADERSHIP", "Shows positive leadership", Valence.POSITIVE),
        Category("DISRUPT", "Disrupting the lesson", Valence.NEGATIVE),
        Category("LATE", "Late to class", Valence.NEGATIVE),
        Category("OFFTASK", "Off task after redirection", Valence.NEGATIVE),
    )
)

_FIRST_NAMES = (
    "Ava", "Ben", "Chloe", "Dev", "Ella", "Finn", "Grace", "Hugo", "Isla", "Jack",
    "Kira", "Liam", "Mia", "Noah", "Orla", "Priya", "Quinn", "Ruby", "Sam", "Tara",
)
_LAST_NAMES = (
    "Nguyen", "Smith", "Patel", "Jones", "Kaur", "Brown", "Silva", "Chen", "Walsh", "Rossi",
)

TEACHER_POOL_SIZE = 94  # whole-school teaching staff; only the rotation teaches the demo class
ROTATION_SIZE = 7
CLASS_SIZE = 20
DEMO_ANCHOR = datetime(2026, 2, 2, 9, 0, tzinfo=timezone.utc)  # a Monday


def seed_demo_school(store: SisStore, seed: int = 7, n_sessions: int = 10) -> dict:
    """Populate ``store`` with the demo school and return a count summary."""
    rng = random.Random(f"{seed}:names")
    store.set_taxonomy(DEFAULT_TAXONOMY)

    student_ids = [f"s{i + 1:03d}" for i in range(CLASS_SIZE)]
    udid_rng = random.Random(f"{seed}:udids")
    for sid in student_ids:
        name = f"{rng.choice(_FIRST_NAMES)} {rng.choice(_LAST_NAMES)}"
        store.add_student(Student(student_id=sid, name=name, year_level=8))
        store.register_device(generate_udid(udid_rng.getrandbits(63)), sid)

    for i in range(TEACHER_POOL_SIZE):
        name = f"{rng.choice(_FIRST_NAMES)} {rng.choice(_LAST_NAMES)}"
        store.add_teacher(Teacher(teacher_id=f"t{i + 1:02d}", name=name))

    layout = ClassroomLayout.grid(student_ids)
    interaction = InteractionModel()
    path_loss = PathLossModel()
    scanner = ScannerConfig()
    seed_rng = random.Random(f"{seed}:sessions")

    records = 0
    for i in range(n_sessions):
        # Weekday lessons only: five per week starting from the anchor Monday.
        start = DEMO_ANCHOR + timedelta(days=i + 2 * (i // 5))
        session = SessionConfig(rng_seed=seed_rng.getrandbits(63))
        lesson = Lesson(
            lesson_id=f"demo-L{i + 1:03d}",
            teacher_id=f"t{i % ROTATION_SIZE + 1:02d}",
            roster=frozenset(student_ids),
            start=start,
            end=start + timedelta(seconds=session.duration_s),
        )
        store.add_lesson(lesson)
        outcome = run_session(
            store=store,
            lesson=lesson,
            layout=layout,
            interaction=interaction,
            session=session,
            agent_kind="proximity",
            path_loss=path_loss,
            scanner=scanner,
        )
        records += outcome.records_captured

    return {
        "students": len(student_ids),
        "teachers": TEACHER_POOL_SIZE,
        "lessons": n_sessions,
        "records": records,
    }
