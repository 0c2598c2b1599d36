"""Nearest-student selection from received signal strength.

Models advertisement reception as (udid, rssi, timestamp) triples, smooths
per-device signal with an EWMA, and picks the strongest device with
hysteresis plus a multi-scan confirmation so the selection does not flap
between adjacent devices under shadowing noise.

Everything here is a pure state transition over immutable snapshots; the
module draws no entropy of its own. Callers synthesizing signals pass their
own standard-normal draws into ``rssi_from_distance``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable, Mapping

from .domain import Udid, parse_rfc3339, to_rfc3339


@dataclass(frozen=True)
class PathLossModel:
    """Log-distance path loss with Gaussian shadowing.

    ``tx_power_dbm_at_1m`` is the RSSI observed at the 1 m reference
    distance; ``exponent`` is the dimensionless decay rate (~2 free space,
    higher indoors); ``noise_sigma_db`` scales the caller's noise draw.
    """

    tx_power_dbm_at_1m: float = -59.0
    exponent: float = 2.0
    noise_sigma_db: float = 2.0

    def __post_init__(self) -> None:
        if self.exponent <= 0:
            raise ValueError("path-loss exponent must be positive")
        if self.noise_sigma_db < 0:
            raise ValueError("noise_sigma_db must be non-negative")


@dataclass(frozen=True)
class Advertisement:
    udid: Udid
    rssi_dbm: float
    ts: datetime

    def __post_init__(self) -> None:
        if not math.isfinite(self.rssi_dbm):
            raise ValueError("rssi_dbm must be finite")


@dataclass(frozen=True)
class SmoothedTrack:
    udid: Udid
    ewma_rssi_dbm: float
    last_seen: datetime


@dataclass(frozen=True)
class ScannerConfig:
    ewma_alpha: float = 0.3
    stale_after_s: float = 5.0
    hysteresis_db: float = 6.0
    confirm_scans: int = 3

    def __post_init__(self) -> None:
        if not 0 < self.ewma_alpha <= 1:
            raise ValueError("ewma_alpha must be in (0, 1]")
        if self.stale_after_s <= 0:
            raise ValueError("stale_after_s must be positive")
        if self.hysteresis_db < 0:
            raise ValueError("hysteresis_db must be non-negative")
        if self.confirm_scans < 1:
            raise ValueError("confirm_scans must be at least 1")


@dataclass(frozen=True)
class ProximitySelection:
    """Current nearest device plus the anti-flap challenger state."""

    current: Udid | None = None
    challenger: Udid | None = None
    challenger_streak: int = 0


Tracks = Mapping[Udid, SmoothedTrack]


def rssi_from_distance(model: PathLossModel, distance_m: float, noise_draw: float = 0.0) -> float:
    """Synthesize an RSSI for a device ``distance_m`` meters away.

    ``noise_draw`` is a standard-normal sample (0 for a noiseless reading);
    it is scaled by the model's shadowing sigma.
    """
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    return (
        model.tx_power_dbm_at_1m
        - 10.0 * model.exponent * math.log10(distance_m)
        + noise_draw * model.noise_sigma_db
    )


def ingest(tracks: Tracks, adv: Advertisement, cfg: ScannerConfig) -> dict[Udid, SmoothedTrack]:
    """Fold one advertisement into the track map, returning a new map."""
    prev = tracks.get(adv.udid)
    if prev is None:
        ewma = adv.rssi_dbm
    else:
        ewma = cfg.ewma_alpha * adv.rssi_dbm + (1.0 - cfg.ewma_alpha) * prev.ewma_rssi_dbm
    updated = dict(tracks)
    updated[adv.udid] = SmoothedTrack(udid=adv.udid, ewma_rssi_dbm=ewma, last_seen=adv.ts)
    return updated


def evict_stale(tracks: Tracks, now: datetime, cfg: ScannerConfig) -> dict[Udid, SmoothedTrack]:
    """Drop every track not heard from within ``stale_after_s`` seconds."""
    return {
        udid: track
        for udid, track in tracks.items()
        if (now - track.last_seen).total_seconds() <= cfg.stale_after_s
    }


def _strongest(tracks: Tracks) -> SmoothedTrack:
    # Tie-break on equal ewma: lexicographically smallest udid.
    return min(tracks.values(), key=lambda t: (-t.ewma_rssi_dbm, t.udid))


def select_nearest(sel: ProximitySelection, tracks: Tracks, cfg: ScannerConfig) -> ProximitySelection:
    """Advance the selection state machine by one scan cycle.

    A challenger must beat the incumbent's smoothed RSSI by at least
    ``hysteresis_db`` on ``confirm_scans`` consecutive cycles before it takes
    over; any cycle it fails to qualify resets its streak. An incumbent that
    vanishes from the track map triggers immediate re-selection.
    """
    if not tracks:
        return ProximitySelection()

    if sel.current is None or sel.current not in tracks:
        return ProximitySelection(current=_strongest(tracks).udid)

    incumbent = tracks[sel.current]
    rivals = {u: t for u, t in tracks.items() if u != sel.current}
    if not rivals:
        return ProximitySelection(current=sel.current)

    best = _strongest(rivals)
    if best.ewma_rssi_dbm >= incumbent.ewma_rssi_dbm + cfg.hysteresis_db:
        streak = sel.challenger_streak + 1 if sel.challenger == best.udid else 1
        if streak >= cfg.confirm_scans:
            return ProximitySelection(current=best.udid)
        return ProximitySelection(current=sel.current, challenger=best.udid, challenger_streak=streak)

    return ProximitySelection(current=sel.current)


def write_trace(path: str | Path, advertisements: Iterable[Advertisement]) -> None:
    """Write advertisements as JSON lines: {ts, udid, rssi_dbm} per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for adv in advertisements:
            fh.write(
                json.dumps(
                    {"ts": to_rfc3339(adv.ts), "udid": adv.udid, "rssi_dbm": adv.rssi_dbm},
                    sort_keys=True,
                )
            )
            fh.write("\n")


def read_trace(path: str | Path) -> list[Advertisement]:
    out: list[Advertisement] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            out.append(
                Advertisement(udid=obj["udid"], rssi_dbm=float(obj["rssi_dbm"]), ts=parse_rfc3339(obj["ts"]))
            )
    return out
