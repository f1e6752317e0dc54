"""Raw point ingestion: parse, validate, group into journeys, clean.

The parser streams fixed-size chunks so peak memory is bounded by the chunk
size plus the largest journey still open, independent of total file size.
Journeys are released ordered by (first timestamp, journey id) whenever that
order is already decidable from the open set.
"""
from __future__ import annotations

import heapq
import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np
import pandas as pd

from .config import IngestConfig
from .geom import MPH_TO_MPS, LocalProjection, projection_for_bounds

log = logging.getLogger(__name__)

MAX_REPORTED_LINES = 100


@dataclass(frozen=True)
class GpsPoint:
    """One telemetry sample inside a journey."""

    journey_id: str
    point_id: str
    timestamp: int
    lat: float
    lon: float
    speed: float
    heading: float
    postal_code: Optional[str] = None


@dataclass
class Journey:
    """Time-ordered point sequence for one ignition-to-ignition trip.

    Stored as parallel arrays; ``timestamps`` is strictly increasing.
    """

    journey_id: str
    timestamps: np.ndarray  # int64 seconds
    lat: np.ndarray
    lon: np.ndarray
    speed: np.ndarray  # mph
    heading: np.ndarray  # degrees [0, 360)
    point_ids: np.ndarray  # object

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def start_time(self) -> int:
        return int(self.timestamps[0])

    @property
    def end_time(self) -> int:
        return int(self.timestamps[-1])

    def points(self) -> Iterator[GpsPoint]:
        for i in range(len(self.timestamps)):
            yield GpsPoint(
                journey_id=self.journey_id,
                point_id=str(self.point_ids[i]),
                timestamp=int(self.timestamps[i]),
                lat=float(self.lat[i]),
                lon=float(self.lon[i]),
                speed=float(self.speed[i]),
                heading=float(self.heading[i]),
            )


@dataclass
class RejectLog:
    """Validation failures, with the first offending line numbers kept."""

    total: int = 0
    reasons: dict = field(default_factory=dict)
    first_lines: list = field(default_factory=list)

    def add(self, reason: str, lines: Iterable[int], count: Optional[int] = None) -> None:
        n = 0
        for ln in lines:
            if len(self.first_lines) < MAX_REPORTED_LINES:
                self.first_lines.append(int(ln))
            n += 1
        if count is not None:
            n = count
        self.total += n
        self.reasons[reason] = self.reasons.get(reason, 0) + n

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "reasons": dict(sorted(self.reasons.items())),
            "first_lines": self.first_lines,
        }


@dataclass
class IngestReport:
    rows_read: int = 0
    points_accepted: int = 0
    rejects: RejectLog = field(default_factory=RejectLog)
    journeys_grouped: int = 0
    journeys_split: int = 0
    journeys_dropped_too_few: int = 0
    journeys_rejected: dict = field(default_factory=dict)
    points_dropped_teleport: int = 0
    journeys_accepted: int = 0
    points_in_accepted: int = 0

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "points_accepted": self.points_accepted,
            "rejected_lines": self.rejects.to_dict(),
            "journeys_grouped": self.journeys_grouped,
            "journeys_split": self.journeys_split,
            "journeys_dropped_too_few": self.journeys_dropped_too_few,
            "journeys_rejected": dict(sorted(self.journeys_rejected.items())),
            "points_dropped_teleport": self.points_dropped_teleport,
            "journeys_accepted": self.journeys_accepted,
            "points_in_accepted": self.points_in_accepted,
        }

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


class PointChunk:
    """Validated points from one input chunk, as parallel arrays."""

    __slots__ = ("journey_id", "point_id", "timestamp", "lat", "lon", "speed", "heading")

    def __init__(self, journey_id, point_id, timestamp, lat, lon, speed, heading):
        self.journey_id = journey_id
        self.point_id = point_id
        self.timestamp = timestamp
        self.lat = lat
        self.lon = lon
        self.speed = speed
        self.heading = heading

    def __len__(self) -> int:
        return len(self.timestamp)


def _coerce_numeric(series: pd.Series) -> np.ndarray:
    if series.dtype.kind in "fi":
        return series.to_numpy(dtype=np.float64, copy=False)
    return pd.to_numeric(series, errors="coerce").to_numpy(dtype=np.float64)


def _validate_chunk(frame: pd.DataFrame, cols, first_line: int, rejects: RejectLog) -> PointChunk:
    """Field-level validation; rejected rows are counted, never fatal."""
    n = len(frame)
    ts = _coerce_numeric(frame[cols.timestamp])
    lat = _coerce_numeric(frame[cols.lat])
    lon = _coerce_numeric(frame[cols.lon])
    speed = _coerce_numeric(frame[cols.speed])
    heading = _coerce_numeric(frame[cols.heading])
    jid = frame[cols.journey_id].astype(str).to_numpy(dtype=object)
    pid = frame[cols.point_id].astype(str).to_numpy(dtype=object)

    ok = np.ones(n, dtype=bool)
    checks = (
        ("bad_timestamp", np.isfinite(ts) & (ts >= 0) & (ts == np.floor(ts))),
        ("bad_lat", np.isfinite(lat) & (lat >= -90.0) & (lat <= 90.0)),
        ("bad_lon", np.isfinite(lon) & (lon >= -180.0) & (lon <= 180.0)),
        ("bad_speed", np.isfinite(speed) & (speed >= 0.0)),
        ("bad_heading", np.isfinite(heading) & (heading >= 0.0) & (heading < 360.0)),
        ("bad_journey_id", (jid != "") & (jid != "nan")),
    )
    for reason, valid in checks:
        bad = ok & ~valid
        if bad.any():
            rejects.add(reason, (np.flatnonzero(bad) + first_line).tolist())
            ok &= valid

    if ok.all():
        keep = slice(None)
    else:
        keep = np.flatnonzero(ok)
    return PointChunk(
        journey_id=jid[keep],
        point_id=pid[keep],
        timestamp=ts[keep].astype(np.int64),
        lat=lat[keep],
        lon=lon[keep],
        speed=speed[keep],
        heading=heading[keep],
    )


def _iter_csv_chunks(path: str, cfg: IngestConfig, rejects: RejectLog, report: IngestReport):
    cols = cfg.columns
    required = [cols.journey_id, cols.point_id, cols.timestamp, cols.lat, cols.lon, cols.speed, cols.heading]
    try:
        reader = pd.read_csv(
            path,
            chunksize=cfg.chunk_rows,
            usecols=lambda c: c in required,
            dtype={cols.journey_id: str, cols.point_id: str},
            on_bad_lines="skip",
        )
    except (OSError, ValueError) as exc:
        raise IngestError(f"cannot read points file '{path}': {exc}") from exc
    line = 2  # 1-based, after the header
    parsed_rows = 0
    for frame in reader:
        missing = [c for c in required if c not in frame.columns]
        if missing:
            raise IngestError(f"points file '{path}' lacks required columns {missing}")
        parsed_rows += len(frame)
        yield _validate_chunk(frame, cols, line, rejects)
        line += len(frame)
    # Structurally bad lines were skipped by the reader without positions;
    # reconcile the count against the physical line count.
    data_lines = _count_data_lines(path)
    report.rows_read += data_lines
    skipped = data_lines - parsed_rows
    if skipped > 0:
        rejects.add("malformed_line", [], count=skipped)


def _count_data_lines(path: str) -> int:
    lines = 0
    last = b"\n"
    with open(path, "rb") as fh:
        while True:
            block = fh.read(1 << 22)
            if not block:
                break
            lines += block.count(b"\n")
            last = block[-1:]
    if last != b"\n":
        lines += 1
    return max(lines - 1, 0)  # minus header


def _iter_jsonl_chunks(path: str, cfg: IngestConfig, rejects: RejectLog, report: IngestReport):
    cols = cfg.columns
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read points file '{path}': {exc}") from exc
    with fh:
        rows, lines = [], []
        line_no = 0
        for raw in fh:
            line_no += 1
            report.rows_read += 1
            if not raw.strip():
                rejects.add("malformed_line", [line_no])
                continue
            try:
                rows.append(json.loads(raw))
                lines.append(line_no)
            except json.JSONDecodeError:
                rejects.add("malformed_line", [line_no])
                continue
            if len(rows) >= cfg.chunk_rows:
                yield _jsonl_rows_to_chunk(rows, lines, cols, rejects)
                rows, lines = [], []
        if rows:
            yield _jsonl_rows_to_chunk(rows, lines, cols, rejects)


def _jsonl_rows_to_chunk(rows, lines, cols, rejects):
    frame = pd.DataFrame(rows)
    for name in (cols.journey_id, cols.point_id, cols.timestamp, cols.lat, cols.lon, cols.speed, cols.heading):
        if name not in frame.columns:
            frame[name] = np.nan
    # Validate positionally, then map reported offsets back to line numbers.
    local = RejectLog()
    out = _validate_chunk(frame, cols, 0, local)
    for reason, count in local.reasons.items():
        rejects.reasons[reason] = rejects.reasons.get(reason, 0) + count
    rejects.total += local.total
    for off in local.first_lines:
        if len(rejects.first_lines) < MAX_REPORTED_LINES:
            rejects.first_lines.append(int(lines[off]))
    return out


class IngestError(RuntimeError):
    """Fatal ingestion problem (unreadable stream, missing columns)."""


def parse_points(paths, cfg: IngestConfig, report: IngestReport) -> Iterator[PointChunk]:
    """Stream validated point chunks from one or more input files."""
    if isinstance(paths, str):
        paths = [paths]
    for path in paths:
        if cfg.input_format == "jsonl":
            it = _iter_jsonl_chunks(path, cfg, report.rejects, report)
        else:
            it = _iter_csv_chunks(path, cfg, report.rejects, report)
        for chunk in it:
            report.points_accepted += len(chunk)
            yield chunk


class _OpenJourney:
    __slots__ = ("buffers", "last_row", "min_ts")

    def __init__(self, last_row):
        self.buffers = []
        self.last_row = last_row
        self.min_ts = np.iinfo(np.int64).max


class JourneyGrouper:
    """Partition a point stream into journeys (sort, dedup, gap-split).

    Every accepted point lands in exactly one journey.  Duplicate
    (journey_id, timestamp) pairs collapse to the first occurrence in input
    order; gaps above ``gap_split_s`` split a journey into parts.
    """

    def __init__(self, cfg: IngestConfig, report: IngestReport):
        self.cfg = cfg
        self.report = report
        self._open: dict = {}
        self._ready: list = []  # heap of (first_ts, journey_id, Journey)
        self._rows_seen = 0
        self._seq = 0

    def add_chunk(self, chunk: PointChunk) -> list[Journey]:
        if len(chunk) == 0:
            return []
        order = np.argsort(chunk.journey_id, kind="stable")
        jids = chunk.journey_id[order]
        boundaries = np.flatnonzero(np.concatenate(([True], jids[1:] != jids[:-1])))
        boundaries = np.append(boundaries, len(jids))
        for b0, b1 in zip(boundaries[:-1], boundaries[1:]):
            jid = jids[b0]
            idx = order[b0:b1]
            entry = self._open.get(jid)
            if entry is None:
                entry = self._open[jid] = _OpenJourney(self._rows_seen)
            entry.buffers.append(
                (
                    chunk.timestamp[idx],
                    chunk.lat[idx],
                    chunk.lon[idx],
                    chunk.speed[idx],
                    chunk.heading[idx],
                    chunk.point_id[idx],
                )
            )
            entry.last_row = self._rows_seen
            entry.min_ts = min(entry.min_ts, int(chunk.timestamp[idx].min()))
        self._rows_seen += len(chunk)
        self._flush_stale()
        return self._release()

    def finish(self) -> list[Journey]:
        for jid in list(self._open):
            self._finalize(jid)
        out = [item[3] for item in sorted(self._ready)]
        self._ready = []
        return out

    def _flush_stale(self) -> None:
        stale = [jid for jid, e in self._open.items() if self._rows_seen - e.last_row > self.cfg.flush_after_rows]
        for jid in stale:
            self._finalize(jid)

    def _release(self) -> list[Journey]:
        out = []
        if not self._open:
            bound = np.iinfo(np.int64).max
        else:
            bound = min(e.min_ts for e in self._open.values())
        while self._ready and self._ready[0][0] <= bound:
            out.append(heapq.heappop(self._ready)[3])
        return out

    def _finalize(self, jid) -> None:
        entry = self._open.pop(jid)
        ts = np.concatenate([b[0] for b in entry.buffers])
        order = np.argsort(ts, kind="stable")
        ts = ts[order]
        first = np.concatenate(([True], ts[1:] != ts[:-1]))  # keep-first dedup
        sel = order[first]
        ts = ts[first]
        arrays = [np.concatenate([b[k] for b in entry.buffers])[sel] for k in range(1, 6)]
        gaps = np.flatnonzero(np.diff(ts) > self.cfg.gap_split_s) + 1
        parts = np.split(np.arange(len(ts)), gaps)
        self.report.journeys_grouped += 1
        if len(parts) > 1:
            self.report.journeys_split += len(parts) - 1
        for k, part in enumerate(parts):
            if len(part) < 2:
                self.report.journeys_dropped_too_few += 1
                continue
            part_id = jid if len(parts) == 1 else f"{jid}~{k + 1}"
            journey = Journey(
                journey_id=part_id,
                timestamps=ts[part],
                lat=arrays[0][part],
                lon=arrays[1][part],
                speed=arrays[2][part],
                heading=arrays[3][part],
                point_ids=arrays[4][part],
            )
            self._seq += 1
            heapq.heappush(self._ready, (journey.start_time, journey.journey_id, self._seq, journey))


def group_journeys(chunks: Iterable[PointChunk], cfg: IngestConfig, report: IngestReport) -> Iterator[Journey]:
    grouper = JourneyGrouper(cfg, report)
    for chunk in chunks:
        yield from grouper.add_chunk(chunk)
    yield from grouper.finish()


def _journey_projection(journey: Journey) -> LocalProjection:
    return projection_for_bounds(
        float(journey.lat.min()), float(journey.lat.max()), float(journey.lon.min()), float(journey.lon.max())
    )


def validate_journey(journey: Journey, cfg: IngestConfig):
    """Clean one journey; returns (journey or None, reason, teleport_drops).

    The teleport filter removes points whose implied speed over ground from
    the previous kept fix exceeds ``teleport_mph``.
    """
    dropped = 0
    ts = journey.timestamps
    proj = _journey_projection(journey)
    x, y = proj.to_xy(journey.lat, journey.lon)
    dt = np.diff(ts).astype(np.float64)
    dist = np.hypot(np.diff(x), np.diff(y))
    limit_mps = cfg.teleport_mph * MPH_TO_MPS
    if len(ts) >= 2 and (dist > limit_mps * dt).any():
        keep = [0]
        last = 0
        for i in range(1, len(ts)):
            d = float(np.hypot(x[i] - x[last], y[i] - y[last]))
            if d > limit_mps * (ts[i] - ts[last]):
                dropped += 1
                continue
            keep.append(i)
            last = i
        if dropped:
            keep = np.asarray(keep)
            journey = Journey(
                journey_id=journey.journey_id,
                timestamps=ts[keep],
                lat=journey.lat[keep],
                lon=journey.lon[keep],
                speed=journey.speed[keep],
                heading=journey.heading[keep],
                point_ids=journey.point_ids[keep],
            )
    if len(journey) < cfg.min_points:
        return None, "too_few_points", dropped
    if journey.end_time - journey.start_time < cfg.min_duration_s:
        return None, "too_short_duration", dropped
    return journey, None, dropped


def clean_journeys(journeys: Iterable[Journey], cfg: IngestConfig, report: IngestReport) -> Iterator[Journey]:
    for journey in journeys:
        cleaned, reason, dropped = validate_journey(journey, cfg)
        report.points_dropped_teleport += dropped
        if cleaned is None:
            report.journeys_rejected[reason] = report.journeys_rejected.get(reason, 0) + 1
            continue
        report.journeys_accepted += 1
        report.points_in_accepted += len(cleaned)
        yield cleaned


def stream_journeys(paths, cfg: IngestConfig, report: IngestReport) -> Iterator[Journey]:
    """Full ingest pass: parse -> group -> validate, streaming."""
    chunks = parse_points(paths, cfg, report)
    yield from clean_journeys(group_journeys(chunks, cfg, report), cfg, report)
