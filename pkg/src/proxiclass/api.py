"""HTTP+JSON surface of the student information service.

Apps read and write through this API: device registration, record writes
with immediate validation feedback, record queries, the quality and
continuous-improvement reports, and the live nearest-student snapshot that
drives the teacher console (polled or as a server-sent event stream).

Errors are always ``{code, detail}`` JSON; timestamps are RFC 3339 strings.
"""

from __future__ import annotations

import asyncio
import json
import threading
from datetime import datetime

from fastapi import Body, FastAPI, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse

from .domain import BehaviorRecord, BehaviorTaxonomy
from .quality import QualityConfig, quality_report
from .reports import (
    BestPracticePolicy,
    school_alignments,
    school_kpi,
    teacher_alignment,
    weekly_alignment_series,
    weekly_kpi_series,
)
from .seeddata import DEFAULT_TAXONOMY
from .store import SisError, SisStore
from .domain import parse_rfc3339

STREAM_POLL_INTERVAL_S = 0.2

_STATUS = {"not_found": 404, "conflict": 409, "malformed": 400, "validation_warning": 400}


class ProximityHub:
    """Latest nearest-device snapshot per teacher, with change counters.

    Publishers (a scanner or the simulator) post snapshots; readers poll or
    follow the version counter to stream changes without missing updates.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._snapshots: dict[str, tuple[str | None, int]] = {}

    def publish(self, teacher_id: str, udid: str | None) -> None:
        with self._lock:
            _, version = self._snapshots.get(teacher_id, (None, 0))
            self._snapshots[teacher_id] = (udid, version + 1)

    def get(self, teacher_id: str) -> tuple[str | None, int]:
        with self._lock:
            return self._snapshots.get(teacher_id, (None, 0))


def _parse_ts(value: str | None, name: str) -> datetime | None:
    if value is None or value == "":
        return None
    try:
        return parse_rfc3339(value)
    except ValueError as exc:
        raise SisError.malformed(f"bad {name} timestamp {value!r}: {exc}") from exc


def _parse_range(from_: str | None, to: str | None) -> tuple[datetime | None, datetime | None]:
    start = _parse_ts(from_, "from")
    end = _parse_ts(to, "to")
    if start is not None and end is not None and start > end:
        raise SisError.malformed("inverted time range: from is after to")
    return start, end


def create_app(
    store: SisStore,
    qcfg: QualityConfig | None = None,
    policy: BestPracticePolicy | None = None,
) -> FastAPI:
    qcfg = qcfg or QualityConfig()
    policy = policy or BestPracticePolicy()
    hub = ProximityHub()
    app = FastAPI(title="proxiclass SIS", docs_url=None, redoc_url=None)
    app.state.store = store
    app.state.hub = hub
    # The console is served statically from elsewhere; let it call across origins.
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"])

    def taxonomy() -> BehaviorTaxonomy:
        return store.taxonomy if store.taxonomy is not None else DEFAULT_TAXONOMY

    @app.exception_handler(SisError)
    async def _sis_error(_: Request, exc: SisError) -> JSONResponse:
        return JSONResponse(
            status_code=_STATUS.get(exc.code, 400),
            content={"code": exc.code, "detail": exc.detail},
        )

    @app.get("/taxonomy")
    def get_taxonomy() -> dict:
        return taxonomy().to_json()

    @app.get("/lessons")
    def list_lessons(teacher_id: str | None = None) -> list[dict]:
        lessons = [
            l
            for l in store.lessons.values()
            if teacher_id is None or l.teacher_id == teacher_id
        ]
        lessons.sort(key=lambda l: (l.start, l.lesson_id))
        return [l.to_json() for l in lessons]

    @app.post("/devices", status_code=201)
    def register_device(payload: dict = Body(...)) -> dict:
        try:
            udid = payload["udid"]
            student_id = payload["student_id"]
        except KeyError as exc:
            raise SisError.malformed(f"missing field {exc.args[0]!r}") from exc
        store.register_device(udid, student_id)
        return {"udid": udid, "student_id": student_id}

    @app.get("/students/by-udid/{udid}")
    def lookup_by_udid(udid: str) -> dict:
        student, recent = store.lookup_by_udid(udid)
        return {
            "student": student.to_json(),
            "recent_records": [r.to_json() for r in recent],
        }

    @app.post("/records", status_code=201)
    def write_record(payload: dict = Body(...)) -> dict:
        try:
            record = BehaviorRecord.from_json(payload)
        except (KeyError, ValueError, TypeError) as exc:
            raise SisError.malformed(f"bad record payload: {exc}") from exc
        outcome = store.write_record(record)
        return {"outcome": outcome.value}

    @app.get("/records")
    def query_records(
        student_id: str | None = None,
        teacher_id: str | None = None,
        lesson_id: str | None = None,
        from_: str | None = Query(None, alias="from"),
        to: str | None = None,
    ) -> list[dict]:
        time_range = _parse_range(from_, to)
        records = store.query_records(
            student_id=student_id,
            teacher_id=teacher_id,
            lesson_id=lesson_id,
            time_range=time_range if time_range != (None, None) else None,
        )
        return [r.to_json() for r in records]

    def _records_in_range(from_: str | None, to: str | None):
        time_range = _parse_range(from_, to)
        return store.query_records(time_range=time_range if time_range != (None, None) else None)

    @app.get("/reports/quality")
    def report_quality(
        from_: str | None = Query(None, alias="from"), to: str | None = None
    ) -> dict:
        records = _records_in_range(from_, to)
        return quality_report(records, taxonomy(), store.roster_ids(), qcfg).to_json()

    @app.get("/reports/teachers/{teacher_id}/alignment")
    def report_alignment(
        teacher_id: str,
        from_: str | None = Query(None, alias="from"),
        to: str | None = None,
        bucket: str | None = None,
    ) -> dict:
        if teacher_id not in store.teachers:
            raise SisError.not_found(f"unknown teacher {teacher_id!r}")
        records = _records_in_range(from_, to)
        lessons = list(store.lessons.values())
        if bucket == "week":
            return {
                "teacher_id": teacher_id,
                "series": weekly_alignment_series(teacher_id, records, lessons, taxonomy(), policy),
            }
        alignments = school_alignments(records, lessons, taxonomy(), policy)
        if teacher_id in alignments:
            return alignments[teacher_id].to_json()
        own = [r for r in records if r.teacher_id == teacher_id]
        return teacher_alignment(teacher_id, own, [], taxonomy(), policy).to_json()

    @app.get("/reports/school/kpi")
    def report_kpi(
        from_: str | None = Query(None, alias="from"),
        to: str | None = None,
        bucket: str | None = None,
    ) -> dict:
        records = _records_in_range(from_, to)
        lessons = list(store.lessons.values())
        if bucket == "week":
            return {
                "series": weekly_kpi_series(
                    records, taxonomy(), store.roster_ids(), lessons, policy, qcfg
                )
            }
        return school_kpi(records, taxonomy(), store.roster_ids(), lessons, policy, qcfg).to_json()

    def _snapshot_payload(teacher_id: str) -> dict:
        udid, _ = hub.get(teacher_id)
        student = None
        if udid is not None:
            try:
                found, _recent = store.lookup_by_udid(udid, k=0)
                student = found.to_json()
            except SisError:
                student = None
        return {"teacher_id": teacher_id, "udid": udid, "student": student}

    @app.post("/proximity/current")
    def publish_proximity(payload: dict = Body(...)) -> dict:
        try:
            teacher_id = payload["teacher_id"]
        except KeyError as exc:
            raise SisError.malformed("missing field 'teacher_id'") from exc
        hub.publish(teacher_id, payload.get("udid"))
        return _snapshot_payload(teacher_id)

    @app.get("/proximity/current")
    def current_proximity(teacher_id: str) -> dict:
        return _snapshot_payload(teacher_id)

    @app.get("/proximity/stream")
    async def proximity_stream(teacher_id: str) -> Response:
        async def events():
            seen = -1
            while True:
                _, version = hub.get(teacher_id)
                if version != seen:
                    seen = version
                    payload = _snapshot_payload(teacher_id)
                    yield f"data: {json.dumps(payload, sort_keys=True)}\n\n"
                await asyncio.sleep(STREAM_POLL_INTERVAL_S)

        return StreamingResponse(events(), media_type="text/event-stream")

    return app
