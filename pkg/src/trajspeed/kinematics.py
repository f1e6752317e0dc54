"""Per-interval motion signals and episode detection.

Acceleration comes from reported speeds, yaw rate from reported headings
(headings are far less noisy than differentiated positions), both over the
actual time delta of each consecutive point pair.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .config import KinematicsConfig
from .geom import MPH_TO_MPS, wrap180
from .roadnet import MatchedJourney


class StopAttribution(IntEnum):
    SIGNALIZED = 0
    UNSIGNALIZED = 1
    NONE = 2


@dataclass
class IntervalSet:
    """Motion intervals between consecutive points, as parallel arrays.

    ``start`` holds the index of each interval's first point.  ``valid`` masks
    out intervals whose dt exceeds the gap-split threshold; invalid intervals
    contribute to nothing and break episode runs.
    """

    start: np.ndarray  # int64 point index
    dt: np.ndarray  # seconds, > 0
    accel: np.ndarray  # m/s^2, signed: (v2 - v1) * 0.44704 / dt
    signed_heading_change: np.ndarray  # degrees in (-180, 180]
    yaw_rate: np.ndarray  # deg/s, >= 0
    moving: np.ndarray  # both endpoint speeds >= stop threshold
    stopped: np.ndarray  # both endpoint speeds < stop threshold
    valid: np.ndarray

    def __len__(self) -> int:
        return len(self.dt)


@dataclass
class StopEpisode:
    start: int  # first point index of the stopped run
    end: int  # last point index (inclusive)
    duration: float  # seconds
    attribution: StopAttribution


@dataclass
class TurnEvent:
    start: int
    end: int
    total_heading_change: float  # signed degrees


def derive_intervals(journey_speed, journey_heading, timestamps, cfg: KinematicsConfig, gap_split_s: float = 600.0) -> IntervalSet:
    """One interval per consecutive point pair with dt <= gap_split_s."""
    ts = np.asarray(timestamps)
    v = np.asarray(journey_speed, dtype=np.float64)
    h = np.asarray(journey_heading, dtype=np.float64)
    dt = np.diff(ts).astype(np.float64)
    dv = np.diff(v)
    accel = dv * MPH_TO_MPS / dt
    dh = wrap180(h[1:] - h[:-1])
    yaw = np.abs(dh) / dt
    slow = v < cfg.stop_speed_mph
    stopped = slow[1:] & slow[:-1]
    moving = ~slow[1:] & ~slow[:-1]
    return IntervalSet(
        start=np.arange(len(dt), dtype=np.int64),
        dt=dt,
        accel=accel,
        signed_heading_change=dh,
        yaw_rate=yaw,
        moving=moving,
        stopped=stopped,
        valid=dt <= gap_split_s,
    )


def _runs(mask: np.ndarray):
    """(start, end) inclusive index pairs of maximal True runs."""
    if not mask.any():
        return []
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return list(zip(edges[::2], edges[1::2] - 1))


def detect_stops(intervals: IntervalSet, matched: MatchedJourney, intersection_radius_m: float) -> list[StopEpisode]:
    """Maximal runs of stopped intervals, attributed to the nearest intersection type.

    An episode is SIGNALIZED if any of its points is within the intersection
    radius of a signalized intersection (signalized wins ties), else
    UNSIGNALIZED by the same rule, else NONE.
    """
    episodes = []
    run_mask = intervals.stopped & intervals.valid
    for i0, i1 in _runs(run_mask):
        p0 = int(intervals.start[i0])
        p1 = int(intervals.start[i1]) + 1
        duration = float(intervals.dt[i0 : i1 + 1].sum())
        sig = matched.nearest_signalized_m[p0 : p1 + 1].min()
        unsig = matched.nearest_unsignalized_m[p0 : p1 + 1].min()
        if sig <= intersection_radius_m:
            attribution = StopAttribution.SIGNALIZED
        elif unsig <= intersection_radius_m:
            attribution = StopAttribution.UNSIGNALIZED
        else:
            attribution = StopAttribution.NONE
        episodes.append(StopEpisode(start=p0, end=p1, duration=duration, attribution=attribution))
    return episodes


def detect_turns(intervals: IntervalSet, cfg: KinematicsConfig) -> list[TurnEvent]:
    """Runs of same-sign heading change at or above the yaw gate.

    A run qualifies when some contiguous stretch no longer than
    ``turn_window_s`` accumulates at least ``turn_angle_deg`` of heading
    change; each qualifying run yields exactly one event.  Sign changes split
    runs, so an immediate left-right pair counts twice.
    """
    sign = np.sign(intervals.signed_heading_change)
    gate = (intervals.yaw_rate >= cfg.turn_min_yaw_dps) & intervals.valid & (sign != 0)
    events = []
    for i0, i1 in _runs(gate):
        i = i0
        while i <= i1:
            j = i
            while j <= i1 and sign[j] == sign[i]:
                j += 1
            # same-sign stretch [i, j)
            if _window_reaches(intervals, i, j - 1, cfg):
                total = float(intervals.signed_heading_change[i:j].sum())
                events.append(TurnEvent(start=int(intervals.start[i]), end=int(intervals.start[j - 1]) + 1, total_heading_change=total))
            i = j
    return events


def _window_reaches(intervals: IntervalSet, i0: int, i1: int, cfg: KinematicsConfig) -> bool:
    dh = intervals.signed_heading_change[i0 : i1 + 1]
    dt = intervals.dt[i0 : i1 + 1]
    lo = 0
    cum = 0.0
    elapsed = 0.0
    for hi in range(len(dh)):
        cum += dh[hi]
        elapsed += dt[hi]
        while elapsed > cfg.turn_window_s and lo <= hi:
            cum -= dh[lo]
            elapsed -= dt[lo]
            lo += 1
        if abs(cum) >= cfg.turn_angle_deg:
            return True
    return False


def count_signalized(matched: MatchedJourney, index, intersection_radius_m: float) -> int:
    """Distinct signalized intersections within radius of any journey point."""
    if len(matched.int_pair_index) == 0:
        return 0
    within = matched.int_pair_dist <= intersection_radius_m
    nodes = matched.int_pair_index[within]
    if len(nodes) == 0:
        return 0
    return int(np.unique(nodes[index.int_signalized[nodes]]).size)
