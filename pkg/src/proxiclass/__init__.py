"""Proximity-driven classroom behavior capture and data-quality platform."""

from .domain import (
    BehaviorRecord,
    BehaviorTaxonomy,
    Category,
    Lesson,
    Student,
    Teacher,
    Valence,
    ValidationOutcome,
    generate_udid,
    validate_record,
)
from .proximity import (
    Advertisement,
    PathLossModel,
    ProximitySelection,
    ScannerConfig,
    SmoothedTrack,
    evict_stale,
    ingest,
    rssi_from_distance,
    select_nearest,
)
from .quality import QualityConfig, QualityReport, compare, quality_report
from .store import SisError, SisStore, StoreCorruptError

__all__ = [
    "Advertisement",
    "BehaviorRecord",
    "BehaviorTaxonomy",
    "Category",
    "Lesson",
    "PathLossModel",
    "ProximitySelection",
    "QualityConfig",
    "QualityReport",
    "ScannerConfig",
    "SisError",
    "SisStore",
    "SmoothedTrack",
    "StoreCorruptError",
    "Student",
    "Teacher",
    "Valence",
    "ValidationOutcome",
    "compare",
    "evict_stale",
    "generate_udid",
    "ingest",
    "quality_report",
    "rssi_from_distance",
    "select_nearest",
    "validate_record",
]
