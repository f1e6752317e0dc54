"""Per-segment speeding aggregation and the hotspot map layer.

Aggregation is a streaming single pass over matched points; per-batch sums
are exact (math.fsum) and batch partials merge through a compensated
accumulator, so the final statistics are independent of input order to well
below 1e-12.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .features import LEVEL_EDGES, N_LEVELS


@dataclass
class SegmentStats:
    segment_id: str
    point_count: int
    mean_speeding: float
    p85_speeding: float
    bin_shares: list  # share of points in each speeding-level bin

    def dominant_bin(self) -> int:
        return int(np.argmax(self.bin_shares))


class _Neumaier:
    """Compensated scalar accumulator (order-stable to ~1 ulp)."""

    __slots__ = ("s", "c")

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

    def add(self, value: float) -> None:
        t = self.s + value
        if abs(self.s) >= abs(value):
            self.c += (self.s - t) + value
        else:
            self.c += (value - t) + self.s
        self.s = t

    def total(self) -> float:
        return self.s + self.c


@dataclass
class _SegmentAccumulator:
    count: int = 0
    total: _Neumaier = field(default_factory=_Neumaier)
    bins: np.ndarray = field(default_factory=lambda: np.zeros(N_LEVELS, dtype=np.int64))
    samples: list = field(default_factory=list)  # per-batch arrays, for p85


class SegmentAggregator:
    """Order-independent accumulation of point-level speeding per segment."""

    def __init__(self, keep_samples: bool = False):
        self._acc: dict = {}
        self.skipped_unmatched = 0
        self.total_points = 0
        self.keep_samples = keep_samples

    def add_batch(self, segment_ids: np.ndarray, speeding: np.ndarray, matched_mask: np.ndarray) -> None:
        """Fold one batch of points; unmatched points are counted and skipped."""
        self.total_points += len(matched_mask)
        self.skipped_unmatched += int((~matched_mask).sum())
        seg = np.asarray(segment_ids, dtype=object)[matched_mask]
        y = np.maximum(0.0, np.asarray(speeding, dtype=np.float64)[matched_mask])
        if len(seg) == 0:
            return
        order = np.argsort(seg, kind="stable")
        seg, y = seg[order], y[order]
        bins = np.searchsorted(np.asarray(LEVEL_EDGES), y, side="right")
        boundaries = np.flatnonzero(np.concatenate(([True], seg[1:] != seg[:-1])))
        boundaries = np.append(boundaries, len(seg))
        for b0, b1 in zip(boundaries[:-1], boundaries[1:]):
            acc = self._acc.setdefault(seg[b0], _SegmentAccumulator())
            acc.count += int(b1 - b0)
            acc.total.add(math.fsum(y[b0:b1]))
            acc.bins += np.bincount(bins[b0:b1], minlength=N_LEVELS)
            if self.keep_samples:
                acc.samples.append(y[b0:b1])

    def merge(self, other: "SegmentAggregator") -> None:
        """Merge a partial aggregator (call in a fixed batch order)."""
        self.total_points += other.total_points
        self.skipped_unmatched += other.skipped_unmatched
        for sid, part in other._acc.items():
            acc = self._acc.setdefault(sid, _SegmentAccumulator())
            acc.count += part.count
            acc.total.add(part.total.total())
            acc.bins += part.bins
            acc.samples.extend(part.samples)

    def results(self) -> list:
        out = []
        for sid in sorted(self._acc):
            acc = self._acc[sid]
            if acc.count == 0:
                continue
            if self.keep_samples and acc.samples:
                values = np.sort(np.concatenate(acc.samples))
                p85 = float(np.quantile(values, 0.85))
            else:
                p85 = float("nan")
            out.append(
                SegmentStats(
                    segment_id=str(sid),
                    point_count=acc.count,
                    mean_speeding=acc.total.total() / acc.count,
                    p85_speeding=p85,
                    bin_shares=(acc.bins / acc.count).tolist(),
                )
            )
        return out


def aggregate_segments(point_batches, keep_samples: bool = False) -> list:
    """Aggregate (segment_ids, speeding, matched_mask) batches into stats."""
    agg = SegmentAggregator(keep_samples=keep_samples)
    for segment_ids, speeding, matched in point_batches:
        agg.add_batch(segment_ids, speeding, matched)
    return agg.results()


def filter_hotspots(stats: list, min_points: int = 1000) -> list:
    """Keep segments with at least ``min_points`` matched points."""
    return [s for s in stats if s.point_count >= min_points]


def hotspot_frame(stats: list, statistic: str = "mean") -> pd.DataFrame:
    rows = []
    for s in stats:
        rows.append(
            {
                "segment_id": s.segment_id,
                "point_count": s.point_count,
                "mean_speeding_prop": s.mean_speeding,
                "p85_speeding_prop": s.p85_speeding,
                "dominant_bin": s.dominant_bin(),
                **{f"bin_{k}_share": s.bin_shares[k] for k in range(N_LEVELS)},
            }
        )
    columns = [
        "segment_id",
        "point_count",
        "mean_speeding_prop",
        "p85_speeding_prop",
        "dominant_bin",
        *[f"bin_{k}_share" for k in range(N_LEVELS)],
    ]
    return pd.DataFrame(rows, columns=columns)


def emit_geojson(stats: list, network, statistic: str = "mean") -> dict:
    """Hotspot layer as a FeatureCollection, ordered by segment id."""
    by_id = {seg.segment_id: seg for seg in network.segments}
    features = []
    for s in sorted(stats, key=lambda item: item.segment_id):
        seg = by_id.get(s.segment_id)
        if seg is None:
            raise KeyError(f"hotspot stats reference unknown segment '{s.segment_id}'")
        stat_value = s.mean_speeding if statistic == "mean" else s.p85_speeding
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[float(lon), float(lat)] for lat, lon in seg.polyline],
                },
                "properties": {
                    "segment_id": s.segment_id,
                    "point_count": s.point_count,
                    "mean_speeding_prop": s.mean_speeding,
                    "statistic": statistic,
                    "statistic_value": stat_value,
                    "dominant_bin": s.dominant_bin(),
                    "bin_shares": s.bin_shares,
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}


def write_geojson(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
