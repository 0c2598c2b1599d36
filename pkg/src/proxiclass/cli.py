"""Command-line entry point: serve the SIS, run simulations, score quality,
compare datasets, and seed a demo school.

Exit codes: 0 success (for ``compare``: dominance), 1 operational failure or
non-dominance, 2 configuration/validation failure. Every subcommand is
deterministic given its config and seed; simulated timestamps come from the
simulation clock, never the wall clock.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .domain import BehaviorRecord, BehaviorTaxonomy, parse_rfc3339
from .proximity import PathLossModel, ScannerConfig, write_trace
from .quality import QualityConfig, QualityReport, compare, quality_report
from .seeddata import DEFAULT_TAXONOMY, seed_demo_school
from .sim import (
    DEFAULT_DEFECT_RATES,
    ClassroomLayout,
    InteractionModel,
    SessionConfig,
    SimConfigError,
    TermConfig,
    degrade_dataset,
    run_term,
)
from .store import SisStore, StoreCorruptError

STORE_ENV_VAR = "PROXICLASS_STORE"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


class ConfigError(Exception):
    """Bad input file or option; maps to exit code 2."""


def _read_json(path: str | Path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: file not found")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_jsonl(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True))
            fh.write("\n")


def _read_records_jsonl(path: str | Path) -> list[BehaviorRecord]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: file not found")
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(BehaviorRecord.from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                raise ConfigError(f"{path}: line {lineno}: {exc}") from exc
    return records


def _dataclass_from(cls, data: dict, where: str, errors: list[str]):
    fields = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
    unknown = set(data) - fields
    for key in sorted(unknown):
        errors.append(f"{where}: unknown key {key!r}")
    kwargs = {k: v for k, v in data.items() if k in fields}
    try:
        return cls(**kwargs)
    except (SimConfigError, ValueError) as exc:
        errors.append(f"{where}: {exc}")
        return cls()


def _load_sim_config(path: str | None, seed: int | None, sessions: int | None):
    """Build a TermConfig plus session count from a config file and overrides.

    Validation failures are collected and reported exhaustively.
    """
    raw = _read_json(path) if path else {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    errors: list[str] = []
    known = {"classroom", "session", "interaction", "path_loss", "scanner", "n_sessions", "n_teachers", "start"}
    for key in sorted(set(raw) - known):
        errors.append(f"config: unknown key {key!r}")

    session = _dataclass_from(SessionConfig, raw.get("session", {}), "session", errors)
    interaction = _dataclass_from(InteractionModel, raw.get("interaction", {}), "interaction", errors)
    path_loss = _dataclass_from(PathLossModel, raw.get("path_loss", {}), "path_loss", errors)
    scanner = _dataclass_from(ScannerConfig, raw.get("scanner", {}), "scanner", errors)

    classroom = raw.get("classroom", {})
    for key in sorted(set(classroom) - {"n_students", "cols", "desk_spacing_m", "margin_m"}):
        errors.append(f"classroom: unknown key {key!r}")
    n_students = int(classroom.get("n_students", 20))
    if n_students < 1:
        errors.append("classroom: n_students must be at least 1")
        n_students = 1

    n_sessions = sessions if sessions is not None else int(raw.get("n_sessions", 1))
    if n_sessions < 1:
        errors.append("config: n_sessions must be at least 1")
    try:
        start = parse_rfc3339(raw.get("start", "2026-02-02T09:00:00+00:00"))
    except ValueError as exc:
        errors.append(f"config: bad start timestamp: {exc}")
        start = parse_rfc3339("2026-02-02T09:00:00+00:00")

    if seed is not None:
        session = replace(session, rng_seed=seed)

    if errors:
        raise ConfigError("invalid simulation config:\n  " + "\n  ".join(errors))

    student_ids = [f"s{i + 1:03d}" for i in range(n_students)]
    layout = ClassroomLayout.grid(
        student_ids,
        cols=int(classroom.get("cols", 5)),
        spacing_m=float(classroom.get("desk_spacing_m", 1.5)),
        margin_m=float(classroom.get("margin_m", 1.0)),
    )
    cfg = TermConfig(
        layout=layout,
        taxonomy=DEFAULT_TAXONOMY,
        interaction=interaction,
        session=session,
        path_loss=path_loss,
        scanner=scanner,
        start=start,
        n_teachers=int(raw.get("n_teachers", 7)),
    )
    return cfg, n_sessions


def _load_roster(path: str | Path) -> set[str]:
    data = _read_json(path)
    if not isinstance(data, list):
        raise ConfigError(f"{path}: roster must be a JSON list")
    roster = set()
    for item in data:
        if isinstance(item, str):
            roster.add(item)
        elif isinstance(item, dict) and "student_id" in item:
            roster.add(item["student_id"])
        else:
            raise ConfigError(f"{path}: roster entries must be ids or objects with student_id")
    return roster


def _store_path(arg_value: str | None, config_value: str | None = None) -> str:
    env = os.environ.get(STORE_ENV_VAR)
    if env:
        return env
    if arg_value:
        return arg_value
    if config_value:
        return config_value
    raise ConfigError(f"no store path given (flag, config, or {STORE_ENV_VAR})")


def cmd_serve(args: argparse.Namespace) -> int:
    raw = _read_json(args.config) if args.config else {}
    store_path = _store_path(args.store, raw.get("store_path"))
    store = SisStore.load(store_path)
    host = args.host or raw.get("host", "127.0.0.1")
    port = args.port if args.port is not None else int(raw.get("port", 8000))

    from .api import create_app
    import uvicorn

    app = create_app(store)
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg, n_sessions = _load_sim_config(args.config, args.seed, args.sessions)
    agents = ["legacy", "proximity"] if args.agent == "both" else [args.agent]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    outcomes = {}
    for agent in agents:
        trace = [] if (args.trace and agent == "proximity") else None
        outcome = run_term(n_sessions, cfg, agent, trace=trace)
        outcomes[agent] = outcome
        _write_json(out_dir / f"{agent}_outcome.json", outcome.to_json())
        _write_jsonl(out_dir / f"{agent}_dataset.jsonl", (r.to_json() for r in outcome.dataset))
        if trace is not None:
            write_trace(out_dir / "proximity_trace.jsonl", trace)
        print(f"{agent}: {outcome.records_captured}/{outcome.events_generated} events captured")

    _write_json(out_dir / "taxonomy.json", cfg.taxonomy.to_json())
    _write_json(out_dir / "roster.json", sorted(sid for sid, _, _ in cfg.layout.desks))

    if args.degrade:
        source = outcomes.get("proximity") or outcomes[agents[0]]
        degraded = degrade_dataset(list(source.dataset), DEFAULT_DEFECT_RATES, seed=cfg.session.rng_seed)
        _write_jsonl(out_dir / "degraded_dataset.jsonl", (r.to_json() for r in degraded))

    if args.agent == "both":
        legacy, prox = outcomes["legacy"], outcomes["proximity"]
        ipr = {
            "legacy": legacy.total_interactions / legacy.records_captured
            if legacy.records_captured
            else None,
            "proximity": prox.total_interactions / prox.records_captured
            if prox.records_captured
            else None,
        }
        summary = {
            "n_sessions": n_sessions,
            "events_generated": prox.events_generated,
            "records": {"legacy": legacy.records_captured, "proximity": prox.records_captured},
            "record_ratio": prox.records_captured / legacy.records_captured
            if legacy.records_captured
            else None,
            "interactions_per_record": ipr,
            "interaction_ratio": ipr["legacy"] / ipr["proximity"]
            if ipr["legacy"] and ipr["proximity"]
            else None,
        }
        _write_json(out_dir / "summary.json", summary)
        print(
            f"interaction ratio {summary['interaction_ratio']}, "
            f"record ratio {summary['record_ratio']}"
        )
    return EXIT_OK


def cmd_quality(args: argparse.Namespace) -> int:
    records = _read_records_jsonl(args.dataset)
    taxonomy = BehaviorTaxonomy.from_json(_read_json(args.taxonomy))
    roster = _load_roster(args.roster)
    report = quality_report(records, taxonomy, roster, QualityConfig())
    payload = report.to_json()
    if args.out:
        _write_json(Path(args.out), payload)
    else:
        print(json.dumps(payload, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    legacy = QualityReport.from_json(_read_json(args.report_a))
    new = QualityReport.from_json(_read_json(args.report_b))
    result = compare(legacy, new)
    payload = result.to_json()
    if args.out:
        _write_json(Path(args.out), payload)
    else:
        print(json.dumps(payload, sort_keys=True, indent=2))
    return EXIT_OK if result.dominates else EXIT_FAILURE


def cmd_seed_data(args: argparse.Namespace) -> int:
    store_path = _store_path(args.store)
    if Path(store_path).exists():
        raise ConfigError(f"{store_path}: already exists; refusing to seed over it")
    store = SisStore(journal_path=store_path)
    summary = seed_demo_school(store, seed=args.seed)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="proxiclass")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("serve", help="serve the SIS HTTP API")
    p.add_argument("--config", help="JSON config: {store_path, host, port}")
    p.add_argument("--store", help=f"store journal path (overridden by ${STORE_ENV_VAR})")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("simulate", help="run classroom sessions")
    p.add_argument("--config", help="simulation config JSON")
    p.add_argument("--agent", choices=["legacy", "proximity", "both"], default="both")
    p.add_argument("--seed", type=int, help="override the config rng_seed")
    p.add_argument("--sessions", type=int, help="override the config n_sessions")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--degrade", action="store_true", help="also emit a defect-injected dataset")
    p.add_argument("--trace", action="store_true", help="emit the advertisement trace")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("quality", help="score a dataset's quality")
    p.add_argument("--dataset", required=True, help="records JSONL")
    p.add_argument("--taxonomy", required=True, help="taxonomy JSON")
    p.add_argument("--roster", required=True, help="roster JSON (ids or student objects)")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_quality)

    p = sub.add_parser("compare", help="compare two quality reports (legacy, new)")
    p.add_argument("report_a", help="legacy/baseline QualityReport JSON")
    p.add_argument("report_b", help="new QualityReport JSON")
    p.add_argument("--out", help="write the deltas here instead of stdout")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("seed-data", help="create a demo school store")
    p.add_argument("--store", help=f"store journal path (overridden by ${STORE_ENV_VAR})")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_seed_data)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SimConfigError, StoreCorruptError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
