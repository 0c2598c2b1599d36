from __future__ import annotations

import json
import os
import signal
import socket
import subprocess
import sys
import time
from pathlib import Path

import httpx
import pytest

CLI = [sys.executable, "-m", "proxiclass.cli"]


def run_cli(*args: str, env: dict | None = None) -> subprocess.CompletedProcess:
    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    return subprocess.run(
        [*CLI, *args], capture_output=True, text=True, timeout=120, env=full_env
    )


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class Server:
    def __init__(self, store: Path, port: int, extra_env: dict | None = None):
        env = dict(os.environ)
        if extra_env:
            env.update(extra_env)
        self.port = port
        self.proc = subprocess.Popen(
            [*CLI, "serve", "--store", str(store), "--port", str(port)],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            env=env,
        )

    def wait_ready(self, timeout: float = 20.0) -> None:
        deadline = time.time() + timeout
        while time.time() < deadline:
            if self.proc.poll() is not None:
                raise AssertionError(f"server exited early: {self.proc.stderr.read()}")
            try:
                httpx.get(f"http://127.0.0.1:{self.port}/reports/school/kpi", timeout=1.0)
                return
            except httpx.HTTPError:
                time.sleep(0.1)
        raise AssertionError("server never became ready")

    def stop(self) -> None:
        if self.proc.poll() is None:
            self.proc.send_signal(signal.SIGINT)
            try:
                self.proc.wait(timeout=15)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()

    def __enter__(self) -> "Server":
        self.wait_ready()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()


@pytest.fixture(scope="module")
def sim_out(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("sim")
    result = run_cli(
        "simulate", "--agent", "both", "--seed", "42", "--out-dir", str(out), "--degrade", "--trace"
    )
    assert result.returncode == 0, result.stderr
    return out


class TestSimulate:
    def test_outputs_exist(self, sim_out):
        for name in (
            "legacy_outcome.json",
            "proximity_outcome.json",
            "legacy_dataset.jsonl",
            "proximity_dataset.jsonl",
            "degraded_dataset.jsonl",
            "proximity_trace.jsonl",
            "summary.json",
            "taxonomy.json",
            "roster.json",
        ):
            assert (sim_out / name).exists(), name

    def test_summary_interaction_ratio_exact(self, sim_out):
        summary = json.loads((sim_out / "summary.json").read_text())
        assert summary["interaction_ratio"] == 3.0
        assert summary["interactions_per_record"] == {"legacy": 6.0, "proximity": 2.0}
        assert summary["records"]["proximity"] >= summary["records"]["legacy"]

    def test_byte_identical_rerun(self, sim_out, tmp_path):
        rerun = tmp_path / "rerun"
        result = run_cli(
            "simulate",
            "--agent",
            "both",
            "--seed",
            "42",
            "--out-dir",
            str(rerun),
            "--degrade",
            "--trace",
        )
        assert result.returncode == 0, result.stderr
        for path in sorted(sim_out.iterdir()):
            assert (rerun / path.name).read_bytes() == path.read_bytes(), path.name

    def test_different_seed_differs(self, sim_out, tmp_path):
        other = tmp_path / "other"
        run_cli("simulate", "--agent", "both", "--seed", "43", "--out-dir", str(other))
        assert (other / "proximity_dataset.jsonl").read_bytes() != (
            sim_out / "proximity_dataset.jsonl"
        ).read_bytes()

    def test_config_file_with_unknown_key_exits_2(self, tmp_path):
        config = tmp_path / "sim.json"
        config.write_text(json.dumps({"sessionz": {}}))
        result = run_cli("simulate", "--config", str(config), "--out-dir", str(tmp_path / "o"))
        assert result.returncode == 2
        assert "sessionz" in result.stderr

    def test_config_errors_listed_exhaustively(self, tmp_path):
        config = tmp_path / "sim.json"
        config.write_text(
            json.dumps(
                {
                    "session": {"teaching_fraction": 2.0},
                    "scanner": {"confirm_scans": 0},
                    "bogus": 1,
                }
            )
        )
        result = run_cli("simulate", "--config", str(config), "--out-dir", str(tmp_path / "o"))
        assert result.returncode == 2
        assert "teaching_fraction" in result.stderr
        assert "confirm_scans" in result.stderr
        assert "bogus" in result.stderr

    def test_missing_config_file_exits_2(self, tmp_path):
        result = run_cli(
            "simulate", "--config", str(tmp_path / "none.json"), "--out-dir", str(tmp_path / "o")
        )
        assert result.returncode == 2
        assert "not found" in result.stderr


class TestQualityCompare:
    def quality(self, sim_out, dataset: str, out: Path) -> subprocess.CompletedProcess:
        return run_cli(
            "quality",
            "--dataset",
            str(sim_out / dataset),
            "--taxonomy",
            str(sim_out / "taxonomy.json"),
            "--roster",
            str(sim_out / "roster.json"),
            "--out",
            str(out),
        )

    def test_quality_report_shape(self, sim_out, tmp_path):
        out = tmp_path / "clean.json"
        result = self.quality(sim_out, "proximity_dataset.jsonl", out)
        assert result.returncode == 0, result.stderr
        report = json.loads(out.read_text())
        assert report["accuracy"] == 1.0
        assert report["n_records"] > 0

    def test_compare_self_is_dominant_zero_deltas(self, sim_out, tmp_path):
        out = tmp_path / "clean.json"
        self.quality(sim_out, "proximity_dataset.jsonl", out)
        delta_path = tmp_path / "delta.json"
        result = run_cli("compare", str(out), str(out), "--out", str(delta_path))
        assert result.returncode == 0
        payload = json.loads(delta_path.read_text())
        assert payload["dominates"] is True
        assert all(v == 0.0 for v in payload["deltas"].values())

    def test_degraded_vs_clean_pipeline(self, sim_out, tmp_path):
        clean, degraded = tmp_path / "clean.json", tmp_path / "degraded.json"
        assert self.quality(sim_out, "proximity_dataset.jsonl", clean).returncode == 0
        assert self.quality(sim_out, "degraded_dataset.jsonl", degraded).returncode == 0
        forward = run_cli("compare", str(degraded), str(clean))
        assert forward.returncode == 0
        assert json.loads(forward.stdout)["dominates"] is True
        backward = run_cli("compare", str(clean), str(degraded))
        assert backward.returncode == 1
        assert json.loads(backward.stdout)["dominates"] is False

    def test_quality_parse_error_names_file_and_line(self, sim_out, tmp_path):
        bad = tmp_path / "bad.jsonl"
        good_line = (sim_out / "proximity_dataset.jsonl").read_text().splitlines()[0]
        bad.write_text(good_line + "\n{broken\n")
        result = run_cli(
            "quality",
            "--dataset",
            str(bad),
            "--taxonomy",
            str(sim_out / "taxonomy.json"),
            "--roster",
            str(sim_out / "roster.json"),
        )
        assert result.returncode == 2
        assert "bad.jsonl" in result.stderr and "line 2" in result.stderr


class TestSeedData:
    def test_creates_store(self, tmp_path):
        store = tmp_path / "store.jsonl"
        result = run_cli("seed-data", "--store", str(store), "--seed", "7")
        assert result.returncode == 0, result.stderr
        summary = json.loads(result.stdout)
        assert summary["teachers"] == 94
        assert summary["students"] == 20
        assert summary["records"] > 0
        assert store.exists()

    def test_refuses_existing_store(self, tmp_path):
        store = tmp_path / "store.jsonl"
        store.write_text("")
        result = run_cli("seed-data", "--store", str(store))
        assert result.returncode == 2

    def test_env_var_overrides_store(self, tmp_path):
        env_store = tmp_path / "env-store.jsonl"
        result = run_cli(
            "seed-data",
            "--store",
            str(tmp_path / "ignored.jsonl"),
            env={"PROXICLASS_STORE": str(env_store)},
        )
        assert result.returncode == 0, result.stderr
        assert env_store.exists()
        assert not (tmp_path / "ignored.jsonl").exists()


@pytest.fixture(scope="module")
def seeded_store(tmp_path_factory) -> Path:
    store = tmp_path_factory.mktemp("serve") / "store.jsonl"
    result = run_cli("seed-data", "--store", str(store), "--seed", "7")
    assert result.returncode == 0, result.stderr
    return store


class TestServe:
    def test_round_trip_and_restart_persistence(self, seeded_store):
        port = free_port()
        record = {
            "record_id": "cli-test-0001",
            "student_id": "s001",
            "teacher_id": "t01",
            "lesson_id": "demo-L001",
            "category_code": "RESPECT",
            "rating": 2,
            "comment": "posted over the wire",
            "event_ts": "2026-02-02T09:05:00+00:00",
            "capture_ts": "2026-02-02T09:05:30+00:00",
        }
        base = f"http://127.0.0.1:{port}"
        with Server(seeded_store, port):
            kpi = httpx.get(f"{base}/reports/school/kpi").json()
            assert 0.0 <= kpi["kpi"] <= 1.0
            response = httpx.post(f"{base}/records", json=record)
            assert response.status_code == 201
            assert response.json() == {"outcome": "valid"}

        port = free_port()
        base = f"http://127.0.0.1:{port}"
        with Server(seeded_store, port):
            fetched = httpx.get(f"{base}/records", params={"student_id": "s001"}).json()
            assert record in fetched

    def test_corrupt_store_exits_nonzero_naming_line(self, tmp_path):
        store = tmp_path / "corrupt.jsonl"
        store.write_text('{"type": "teacher", "teacher_id": "t1", "name": "T"}\n{oops\n')
        result = run_cli("serve", "--store", str(store), "--port", str(free_port()))
        assert result.returncode == 2
        assert "line 2" in result.stderr
        assert "corrupt.jsonl" in result.stderr

    def test_missing_store_argument_exits_2(self):
        env = {k: v for k, v in os.environ.items() if k != "PROXICLASS_STORE"}
        result = subprocess.run(
            [*CLI, "serve"], capture_output=True, text=True, timeout=60, env=env
        )
        assert result.returncode == 2
