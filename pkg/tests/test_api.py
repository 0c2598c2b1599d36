from __future__ import annotations

import json
import threading
import time

import httpx
import pytest
import uvicorn
from fastapi.testclient import TestClient

from proxiclass.api import create_app
from proxiclass.domain import generate_udid, to_rfc3339
from proxiclass.store import SisStore

from .conftest import make_record, ts

U1 = generate_udid(101)
U2 = generate_udid(102)


@pytest.fixture
def client(school_store) -> TestClient:
    return TestClient(create_app(school_store))


@pytest.fixture
def empty_client() -> TestClient:
    return TestClient(create_app(SisStore()))


class TestDevices:
    def test_register_created(self, client):
        response = client.post("/devices", json={"udid": U1, "student_id": "s1"})
        assert response.status_code == 201
        assert response.json() == {"udid": U1, "student_id": "s1"}

    def test_reregister_idempotent(self, client):
        client.post("/devices", json={"udid": U1, "student_id": "s1"})
        assert client.post("/devices", json={"udid": U1, "student_id": "s1"}).status_code == 201

    def test_conflict_409(self, client):
        client.post("/devices", json={"udid": U1, "student_id": "s1"})
        response = client.post("/devices", json={"udid": U1, "student_id": "s2"})
        assert response.status_code == 409
        body = response.json()
        assert body["code"] == "conflict" and "detail" in body

    def test_unknown_student_404(self, client):
        response = client.post("/devices", json={"udid": U1, "student_id": "ghost"})
        assert response.status_code == 404
        assert response.json()["code"] == "not_found"

    def test_missing_field_400(self, client):
        response = client.post("/devices", json={"udid": U1})
        assert response.status_code == 400
        assert response.json()["code"] == "malformed"


class TestLookup:
    def test_lookup_round_trip(self, client):
        client.post("/devices", json={"udid": U1, "student_id": "s1"})
        record = make_record("r1", student_id="s1")
        client.post("/records", json=record.to_json())
        response = client.get(f"/students/by-udid/{U1}")
        assert response.status_code == 200
        body = response.json()
        assert body["student"]["student_id"] == "s1"
        assert body["student"]["udid"] == U1
        assert body["recent_records"] == [record.to_json()]

    def test_unknown_udid_404(self, client):
        response = client.get(f"/students/by-udid/{U2}")
        assert response.status_code == 404
        assert response.json()["code"] == "not_found"


class TestRecords:
    def test_write_valid(self, client):
        response = client.post("/records", json=make_record("r1").to_json())
        assert response.status_code == 201
        assert response.json() == {"outcome": "valid"}

    def test_write_defective_record_stored_with_outcome(self, client):
        record = make_record("r1", category_code="XYZ")
        response = client.post("/records", json=record.to_json())
        assert response.status_code == 201
        assert response.json() == {"outcome": "unknown_category"}
        listed = client.get("/records").json()
        assert listed == [record.to_json()]

    def test_duplicate_409(self, client):
        client.post("/records", json=make_record("r1").to_json())
        response = client.post("/records", json=make_record("r1", rating=1).to_json())
        assert response.status_code == 409

    def test_dangling_reference_404(self, client):
        response = client.post("/records", json=make_record("r1", lesson_id="ghost").to_json())
        assert response.status_code == 404

    def test_bad_payload_400(self, client):
        response = client.post("/records", json={"record_id": "r1"})
        assert response.status_code == 400
        assert response.json()["code"] == "malformed"

    def test_wire_round_trip_exact(self, client):
        payload = make_record("r1", comment="exact text", latency_s=12.345678).to_json()
        client.post("/records", json=payload)
        assert client.get("/records", params={"student_id": "s1"}).json() == [payload]

    def test_query_filters_and_range(self, client):
        for i in range(4):
            client.post(
                "/records",
                json=make_record(
                    f"r{i}", teacher_id=f"t{i % 2 + 1}", event_s=i * 1000.0
                ).to_json(),
            )
        by_teacher = client.get("/records", params={"teacher_id": "t1"}).json()
        assert [r["record_id"] for r in by_teacher] == ["r0", "r2"]
        ranged = client.get(
            "/records",
            params={"from": to_rfc3339(ts(1000.0)), "to": to_rfc3339(ts(2000.0))},
        ).json()
        assert [r["record_id"] for r in ranged] == ["r1", "r2"]

    def test_inverted_range_400(self, client):
        response = client.get(
            "/records",
            params={"from": to_rfc3339(ts(100.0)), "to": to_rfc3339(ts(0.0))},
        )
        assert response.status_code == 400
        assert response.json()["code"] == "malformed"

    def test_unparseable_timestamp_400(self, client):
        response = client.get("/records", params={"from": "not-a-time"})
        assert response.status_code == 400


class TestTaxonomy:
    def test_served_shape(self, client, taxonomy):
        assert client.get("/taxonomy").json() == taxonomy.to_json()

    def test_empty_store_serves_default(self, empty_client):
        body = empty_client.get("/taxonomy").json()
        assert {c["valence"] for c in body["categories"]} == {"positive", "negative"}


class TestLessons:
    def test_filtered_by_teacher_sorted_by_start(self, client, school_store):
        listed = client.get("/lessons", params={"teacher_id": "t1"}).json()
        expected = sorted(
            (l.to_json() for l in school_store.lessons.values() if l.teacher_id == "t1"),
            key=lambda l: l["start"],
        )
        assert listed == expected

    def test_unfiltered_lists_all(self, client, school_store):
        assert len(client.get("/lessons").json()) == len(school_store.lessons)


class TestReports:
    def test_quality_shape(self, client):
        client.post("/records", json=make_record("r1").to_json())
        body = client.get("/reports/quality").json()
        assert set(body) == {
            "accuracy",
            "timeliness",
            "mean_capture_latency_s",
            "consistency",
            "completeness",
            "roster_coverage",
            "n_records",
        }
        assert body["n_records"] == 1

    def test_alignment_known_teacher(self, client):
        client.post("/records", json=make_record("r1").to_json())
        body = client.get("/reports/teachers/t1/alignment").json()
        assert body["teacher_id"] == "t1"
        assert 0.0 <= body["alignment"] <= 1.0

    def test_alignment_unknown_teacher_404(self, client):
        assert client.get("/reports/teachers/ghost/alignment").status_code == 404

    def test_alignment_weekly_series(self, client):
        client.post("/records", json=make_record("r1").to_json())
        body = client.get("/reports/teachers/t1/alignment", params={"bucket": "week"}).json()
        assert body["teacher_id"] == "t1"
        assert isinstance(body["series"], list) and body["series"]

    def test_kpi_shape(self, client):
        body = client.get("/reports/school/kpi").json()
        assert set(body) == {"mean_alignment", "quality_index", "coverage", "kpi"}

    def test_kpi_weekly_series(self, client):
        client.post("/records", json=make_record("r1").to_json())
        body = client.get("/reports/school/kpi", params={"bucket": "week"}).json()
        assert body["series"] and all("kpi" in entry for entry in body["series"])

    def test_empty_store_kpi_vacuous(self, empty_client):
        body = empty_client.get("/reports/school/kpi").json()
        assert body == {
            "mean_alignment": 1.0,
            "quality_index": 1.0,
            "coverage": 1.0,
            "kpi": 1.0,
        }


class TestProximity:
    def test_current_defaults_to_null(self, client):
        body = client.get("/proximity/current", params={"teacher_id": "t1"}).json()
        assert body == {"teacher_id": "t1", "udid": None, "student": None}

    def test_publish_then_read(self, client):
        client.post("/devices", json={"udid": U1, "student_id": "s1"})
        client.post("/proximity/current", json={"teacher_id": "t1", "udid": U1})
        body = client.get("/proximity/current", params={"teacher_id": "t1"}).json()
        assert body["udid"] == U1
        assert body["student"]["student_id"] == "s1"

    def test_unregistered_udid_has_no_student(self, client):
        client.post("/proximity/current", json={"teacher_id": "t1", "udid": U2})
        body = client.get("/proximity/current", params={"teacher_id": "t1"}).json()
        assert body["udid"] == U2 and body["student"] is None

    def test_clearing_publishes_null(self, client):
        client.post("/proximity/current", json={"teacher_id": "t1", "udid": U1})
        client.post("/proximity/current", json={"teacher_id": "t1", "udid": None})
        body = client.get("/proximity/current", params={"teacher_id": "t1"}).json()
        assert body["udid"] is None

    def test_per_teacher_isolation(self, client):
        client.post("/proximity/current", json={"teacher_id": "t1", "udid": U1})
        body = client.get("/proximity/current", params={"teacher_id": "t2"}).json()
        assert body["udid"] is None

    def test_stream_emits_snapshots_live(self, school_store):
        # The stream never ends, so it needs a real server that cancels the
        # generator on client disconnect; TestClient buffers instead.
        app = create_app(school_store)
        config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
        server = uvicorn.Server(config)
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        try:
            deadline = time.time() + 10
            while not server.started:
                assert time.time() < deadline, "server did not start"
                time.sleep(0.02)
            port = server.servers[0].sockets[0].getsockname()[1]
            base = f"http://127.0.0.1:{port}"

            httpx.post(f"{base}/devices", json={"udid": U1, "student_id": "s1"})
            httpx.post(f"{base}/proximity/current", json={"teacher_id": "t1", "udid": U1})
            events = []
            with httpx.stream(
                "GET", f"{base}/proximity/stream", params={"teacher_id": "t1"}, timeout=10
            ) as response:
                assert response.status_code == 200
                assert response.headers["content-type"].startswith("text/event-stream")
                for line in response.iter_lines():
                    if line.startswith("data: "):
                        events.append(json.loads(line[len("data: ") :]))
                        if len(events) == 1:
                            httpx.post(
                                f"{base}/proximity/current",
                                json={"teacher_id": "t1", "udid": None},
                            )
                        if len(events) == 2:
                            break
            assert events[0]["udid"] == U1
            assert events[0]["student"]["student_id"] == "s1"
            assert events[1]["udid"] is None
        finally:
            server.should_exit = True
            thread.join(timeout=10)
